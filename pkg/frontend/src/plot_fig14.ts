import { runCli } from "./cli";
import { figCodec } from "./figures";

runCli((text) => figCodec(text));
