import { readFileSync } from "fs";
import { join } from "path";

import { Frame, loadFrame } from "../src/csv";

export const ROOT = join(__dirname, "..");

export function golden(name: string): string {
  return readFileSync(join(ROOT, "golden", name), "utf8");
}

export function goldenFrame(name: string): Frame {
  return loadFrame(name, golden(name));
}

/** All (data-col, data-value) pairs of single-cell marks, in document order. */
export function cellMarks(svg: string): [string, string][] {
  const out: [string, string][] = [];
  const re = /data-col="([^"]*)" data-value="([^"]*)"/g;
  for (const m of svg.matchAll(re)) out.push([m[1] as string, m[2] as string]);
  return out;
}

export interface SeriesMark {
  series: string;
  xCol: string;
  xValues: string[];
  col: string;
  values: string[];
}

/** All polyline series marks with their verbatim cell lists. */
export function seriesMarks(svg: string): SeriesMark[] {
  const out: SeriesMark[] = [];
  const re =
    /data-series="([^"]*)" data-x-col="([^"]*)" data-x-values="([^"]*)" data-col="([^"]*)" data-values="([^"]*)"/g;
  for (const m of svg.matchAll(re)) {
    out.push({
      series: m[1] as string,
      xCol: m[2] as string,
      xValues: (m[3] as string).split(";"),
      col: m[4] as string,
      values: (m[5] as string).split(";"),
    });
  }
  return out;
}

export function sortedPairs(pairs: [string, string][]): string[] {
  return pairs.map(([c, v]) => `${c}=${v}`).sort();
}
