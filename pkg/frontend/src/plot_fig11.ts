import { runCli } from "./cli";
import { figBreakdown } from "./figures";

runCli(figBreakdown);
