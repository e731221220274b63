import { runCli } from "./cli";
import { figDse } from "./figures";

runCli((text) => figDse(text, "tlb_hit_rate", "translation-cache hit rate"));
