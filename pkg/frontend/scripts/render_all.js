// Render every shipped golden CSV to out/. Run `npm run build` first.
const { execFileSync } = require("child_process");
const { mkdirSync } = require("fs");
const { join } = require("path");

const root = join(__dirname, "..");
const out = join(root, "out");
mkdirSync(out, { recursive: true });

const figures = [11, 13, 14, 15, 16, 17, 18, 19, 20, 21];
for (const n of figures) {
  const csv = join(root, "golden", `fig${n}.csv`);
  const svg = join(out, `fig${n}.svg`);
  execFileSync("node", [join(root, "dist", `plot_fig${n}.js`), csv, svg], {
    stdio: "inherit",
  });
}
