import { runCli } from "./cli";
import { figUtilization } from "./figures";

runCli(figUtilization);
