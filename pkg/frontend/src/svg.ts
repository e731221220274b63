/** Minimal deterministic SVG builder.
 *
 * Attributes render in insertion order and every coordinate goes through one
 * formatter, so the same input always serializes to the same bytes. Marks
 * carry their source cells verbatim in data- attributes; the figure tests
 * compare those against the CSV rather than reverse-engineering pixels.
 */

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fmt(n: number): string {
  if (!Number.isFinite(n)) throw new Error(`non-finite coordinate: ${n}`);
  const s = n.toFixed(2).replace(/\.?0+$/, "");
  return s === "-0" || s === "" ? "0" : s;
}

export class El {
  private attrs: [string, string][] = [];
  private children: El[] = [];
  private content = "";

  constructor(readonly tag: string) {}

  attr(key: string, value: string | number): this {
    this.attrs.push([key, typeof value === "number" ? fmt(value) : value]);
    return this;
  }

  text(value: string): this {
    this.content = esc(value);
    return this;
  }

  child(tag: string): El {
    const el = new El(tag);
    this.children.push(el);
    return el;
  }

  render(indent = 0): string {
    const pad = "  ".repeat(indent);
    const attrs = this.attrs.map(([k, v]) => ` ${k}="${esc(v)}"`).join("");
    if (this.children.length === 0 && this.content === "") {
      return `${pad}<${this.tag}${attrs}/>`;
    }
    if (this.children.length === 0) {
      return `${pad}<${this.tag}${attrs}>${this.content}</${this.tag}>`;
    }
    const inner = this.children.map((c) => c.render(indent + 1)).join("\n");
    return `${pad}<${this.tag}${attrs}>\n${inner}\n${pad}</${this.tag}>`;
  }
}

export const PALETTE = [
  "#4878cf",
  "#ee854a",
  "#6acc64",
  "#d65f5f",
  "#956cb4",
  "#8c613c",
  "#dc7ec0",
  "#797979",
];

export function seriesColor(i: number): string {
  const c = PALETTE[i % PALETTE.length];
  if (c === undefined) throw new Error("empty palette");
  return c;
}

export interface Area {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function svgRoot(width: number, height: number): El {
  const root = new El("svg")
    .attr("xmlns", "http://www.w3.org/2000/svg")
    .attr("viewBox", `0 0 ${fmt(width)} ${fmt(height)}`)
    .attr("width", width)
    .attr("height", height)
    .attr("font-family", "Helvetica, Arial, sans-serif");
  root
    .child("rect")
    .attr("x", 0)
    .attr("y", 0)
    .attr("width", width)
    .attr("height", height)
    .attr("fill", "#ffffff");
  return root;
}

export function linearScale(
  d0: number,
  d1: number,
  r0: number,
  r1: number,
): (x: number) => number {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
}

/** Round ticks covering [0, max]; max must be positive. */
export function niceTicks(max: number, count = 5): number[] {
  if (!(max > 0)) throw new Error(`tick range must be positive, got ${max}`);
  const rough = max / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const norm = rough / mag;
  const step = (norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10) * mag;
  const ticks: number[] = [];
  for (let v = 0; v <= max + step * 1e-9; v += step) ticks.push(v);
  return ticks;
}

export interface Tick {
  pos: number;
  label: string;
}

export function drawAxes(
  root: El,
  area: Area,
  xTicks: Tick[],
  yTicks: Tick[],
  xLabel: string,
  yLabel: string,
  title: string,
): void {
  const g = root.child("g").attr("class", "axes");
  g.child("text")
    .attr("x", area.x + area.w / 2)
    .attr("y", 18)
    .attr("text-anchor", "middle")
    .attr("font-size", 13)
    .attr("font-weight", "bold")
    .text(title);
  for (const t of yTicks) {
    g.child("line")
      .attr("x1", area.x)
      .attr("y1", t.pos)
      .attr("x2", area.x + area.w)
      .attr("y2", t.pos)
      .attr("stroke", "#dddddd")
      .attr("stroke-width", 0.5);
    g.child("text")
      .attr("x", area.x - 6)
      .attr("y", t.pos + 3)
      .attr("text-anchor", "end")
      .attr("font-size", 9)
      .text(t.label);
  }
  for (const t of xTicks) {
    g.child("text")
      .attr("x", t.pos)
      .attr("y", area.y + area.h + 14)
      .attr("text-anchor", "middle")
      .attr("font-size", 9)
      .text(t.label);
  }
  g.child("line")
    .attr("x1", area.x)
    .attr("y1", area.y + area.h)
    .attr("x2", area.x + area.w)
    .attr("y2", area.y + area.h)
    .attr("stroke", "#000000")
    .attr("stroke-width", 1);
  g.child("line")
    .attr("x1", area.x)
    .attr("y1", area.y)
    .attr("x2", area.x)
    .attr("y2", area.y + area.h)
    .attr("stroke", "#000000")
    .attr("stroke-width", 1);
  g.child("text")
    .attr("x", area.x + area.w / 2)
    .attr("y", area.y + area.h + 30)
    .attr("text-anchor", "middle")
    .attr("font-size", 11)
    .text(xLabel);
  const ylx = area.x - 40;
  const yly = area.y + area.h / 2;
  g.child("text")
    .attr("x", ylx)
    .attr("y", yly)
    .attr("text-anchor", "middle")
    .attr("font-size", 11)
    .attr("transform", `rotate(-90 ${fmt(ylx)} ${fmt(yly)})`)
    .text(yLabel);
}

export interface LegendItem {
  label: string;
  color: string;
  opacity?: number;
}

export function drawLegend(root: El, items: LegendItem[], x: number, y: number): void {
  const g = root.child("g").attr("class", "legend");
  items.forEach((item, i) => {
    const row = y + i * 14;
    g.child("rect")
      .attr("x", x)
      .attr("y", row)
      .attr("width", 10)
      .attr("height", 10)
      .attr("fill", item.color)
      .attr("fill-opacity", item.opacity ?? 1);
    g.child("text")
      .attr("x", x + 14)
      .attr("y", row + 8)
      .attr("font-size", 9)
      .text(item.label);
  });
}
