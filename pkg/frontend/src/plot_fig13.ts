import { runCli } from "./cli";
import { figTraffic } from "./figures";

runCli(figTraffic);
