import { runCli } from "./cli";
import { figDse } from "./figures";

runCli((text) => figDse(text, "eviction_rate", "reduction-slot eviction rate"));
