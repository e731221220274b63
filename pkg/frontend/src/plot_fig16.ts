import { runCli } from "./cli";
import { figSensitivity } from "./figures";

runCli(figSensitivity);
