import { readFileSync, writeFileSync } from "fs";

/** Shared entry-point body: `node dist/plot_<figure>.js <csv> <out.svg>`. */
export function runCli(render: (csv: string) => string, argv = process.argv): void {
  const csvPath = argv[2];
  const outPath = argv[3];
  if (!csvPath || !outPath) {
    console.error(`usage: node ${argv[1] ?? "plot"} <csv> <out.svg>`);
    process.exit(2);
  }
  let text: string;
  try {
    text = readFileSync(csvPath, "utf8");
  } catch (err) {
    console.error(`cannot read ${csvPath}: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
  let svg: string;
  try {
    svg = render(text);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
  writeFileSync(outPath, svg);
  console.log(`wrote ${outPath}`);
}
