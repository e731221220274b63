/** Figure families for the simulator's CSV outputs.
 *
 * One builder per family; the plot_* entry points are thin wrappers. Every
 * mark embeds the source cells it was drawn from (data-col/data-value for
 * bars, data-col/data-values for series lines) exactly as they appear in the
 * CSV, which is what the test suite checks and what keeps the charts honest:
 * no smoothing, no renormalization.
 */

import { Frame, loadFrame } from "./csv";
import {
  Area,
  El,
  drawAxes,
  drawLegend,
  fmt,
  linearScale,
  niceTicks,
  seriesColor,
  svgRoot,
  Tick,
} from "./svg";

const W = 640;
const H = 400;
const AREA: Area = { x: 70, y: 34, w: W - 90, h: H - 90 };

function finish(root: El): string {
  return root.render() + "\n";
}

function yTicksFor(maxVal: number, scale: (v: number) => number, unit: string): Tick[] {
  return niceTicks(maxVal).map((v) => ({ pos: scale(v), label: fmt(v) + unit }));
}

/** Evenly spaced x positions for ordinal categories. */
function ordinalCenters(n: number, area: Area): number[] {
  const out: number[] = [];
  for (let i = 0; i < n; i++) {
    out.push(area.x + ((i + 0.5) / n) * area.w);
  }
  return out;
}

function at<T>(arr: T[], i: number): T {
  const v = arr[i];
  if (v === undefined) throw new Error(`index ${i} out of range`);
  return v;
}

/** Completion-time breakdown: one stacked bar per method, split at the
 * dispatch-complete event. The split is a timeline cut, so the two segments
 * are additive for every schedule. */
export function figBreakdown(text: string): string {
  const f = loadFrame("breakdown", text).require(
    "method",
    "total_ns",
    "dispatch_done_ns",
  );
  let maxUs = 0;
  for (const row of f.rows) {
    const total = f.num(row, "total_ns");
    const disp = f.num(row, "dispatch_done_ns");
    if (disp > total) {
      throw new Error(`breakdown: dispatch_done_ns ${disp} exceeds total_ns ${total}`);
    }
    maxUs = Math.max(maxUs, total / 1000);
  }
  const yMax = maxUs * 1.08;
  const y = linearScale(0, yMax, AREA.y + AREA.h, AREA.y);
  const root = svgRoot(W, H);
  const marks = root.child("g").attr("class", "marks");
  const centers = ordinalCenters(f.rows.length, AREA);
  const barW = Math.min(46, (AREA.w / f.rows.length) * 0.6);
  const xTicks: Tick[] = [];
  f.rows.forEach((row, i) => {
    const cx = at(centers, i);
    const total = f.num(row, "total_ns") / 1000;
    const disp = f.num(row, "dispatch_done_ns") / 1000;
    marks
      .child("rect")
      .attr("data-col", "dispatch_done_ns")
      .attr("data-value", f.cell(row, "dispatch_done_ns"))
      .attr("x", cx - barW / 2)
      .attr("y", y(disp))
      .attr("width", barW)
      .attr("height", y(0) - y(disp))
      .attr("fill", seriesColor(0));
    marks
      .child("rect")
      .attr("data-col", "total_ns")
      .attr("data-value", f.cell(row, "total_ns"))
      .attr("x", cx - barW / 2)
      .attr("y", y(total))
      .attr("width", barW)
      .attr("height", y(disp) - y(total))
      .attr("fill", seriesColor(1));
    marks
      .child("text")
      .attr("x", cx)
      .attr("y", y(total) - 4)
      .attr("text-anchor", "middle")
      .attr("font-size", 8)
      .text(fmt(total));
    xTicks.push({ pos: cx, label: f.cell(row, "method") });
  });
  drawAxes(root, AREA, xTicks, yTicksFor(yMax, y, ""), "method", "completion time (us)",
    "Completion time by method");
  drawLegend(
    root,
    [
      { label: "until dispatch complete", color: seriesColor(0) },
      { label: "after dispatch complete", color: seriesColor(1) },
    ],
    AREA.x + 8,
    AREA.y + 6,
  );
  return finish(root);
}

/** Wire traffic: per axis value, one stacked bar per method with uplink and
 * downlink data bytes as the two segments. */
export function figTraffic(text: string): string {
  const f = loadFrame("traffic", text).require(
    "axis",
    "value",
    "method",
    "up_data_bytes",
    "down_data_bytes",
  );
  const axis = onlyAxis(f);
  const groups = f.distinct("value");
  const methods = f.distinct("method");
  let maxMb = 0;
  for (const row of f.rows) {
    const mb = (f.num(row, "up_data_bytes") + f.num(row, "down_data_bytes")) / 1e6;
    maxMb = Math.max(maxMb, mb);
  }
  const yMax = maxMb * 1.08;
  const y = linearScale(0, yMax, AREA.y + AREA.h, AREA.y);
  const root = svgRoot(W, H);
  const marks = root.child("g").attr("class", "marks");
  const centers = ordinalCenters(groups.length, AREA);
  const groupW = (AREA.w / groups.length) * 0.72;
  const barW = groupW / methods.length;
  const xTicks: Tick[] = groups.map((g, i) => ({ pos: at(centers, i), label: g }));
  for (const row of f.rows) {
    const gi = groups.indexOf(f.cell(row, "value"));
    const mi = methods.indexOf(f.cell(row, "method"));
    const x0 = at(centers, gi) - groupW / 2 + mi * barW;
    const up = f.num(row, "up_data_bytes") / 1e6;
    const down = f.num(row, "down_data_bytes") / 1e6;
    marks
      .child("rect")
      .attr("data-col", "up_data_bytes")
      .attr("data-value", f.cell(row, "up_data_bytes"))
      .attr("x", x0)
      .attr("y", y(up))
      .attr("width", barW - 2)
      .attr("height", y(0) - y(up))
      .attr("fill", seriesColor(mi));
    marks
      .child("rect")
      .attr("data-col", "down_data_bytes")
      .attr("data-value", f.cell(row, "down_data_bytes"))
      .attr("x", x0)
      .attr("y", y(up + down))
      .attr("width", barW - 2)
      .attr("height", y(up) - y(up + down))
      .attr("fill", seriesColor(mi))
      .attr("fill-opacity", 0.55);
  }
  drawAxes(root, AREA, xTicks, yTicksFor(yMax, y, ""), axis,
    "data bytes on the wire (MB)", "Wire traffic (solid: uplink, pale: downlink)");
  drawLegend(
    root,
    methods.map((m, i) => ({ label: m, color: seriesColor(i) })),
    AREA.x + 8,
    AREA.y + 6,
  );
  return finish(root);
}

interface SeriesSpec {
  name: string;
  xRaw: string[];
  yRaw: string[];
  yVals: number[];
  xPos: number[];
  color: string;
  opacity: number;
  width: number;
}

function polylineMarks(marks: El, yCol: string, xCol: string, series: SeriesSpec[],
  y: (v: number) => number): void {
  for (const s of series) {
    const pts = s.xPos.map((x, i) => `${fmt(x)},${fmt(y(at(s.yVals, i)))}`).join(" ");
    marks
      .child("polyline")
      .attr("data-series", s.name)
      .attr("data-x-col", xCol)
      .attr("data-x-values", s.xRaw.join(";"))
      .attr("data-col", yCol)
      .attr("data-values", s.yRaw.join(";"))
      .attr("points", pts)
      .attr("fill", "none")
      .attr("stroke", s.color)
      .attr("stroke-opacity", s.opacity)
      .attr("stroke-width", s.width);
  }
}

function onlyAxis(f: Frame): string {
  const axes = f.distinct("axis");
  if (axes.length !== 1) {
    throw new Error(`${f.name}: mixed sweep axes: ${axes.join(", ")}`);
  }
  return at(axes, 0);
}

/** Payload efficiency vs target count at one declared granularity. */
export function figCodec(text: string, granularity = "256"): string {
  const f = loadFrame("codec", text).require(
    "transport",
    "granularity_bytes",
    "n_targets",
    "combined_efficiency",
  );
  const rows = f.rows.filter((r) => f.cell(r, "granularity_bytes") === granularity);
  if (rows.length === 0) {
    throw new Error(`codec: no rows at granularity_bytes = ${granularity}`);
  }
  const transports = [] as string[];
  for (const r of rows) {
    const t = f.cell(r, "transport");
    if (!transports.includes(t)) transports.push(t);
  }
  let xMin = Infinity;
  let xMax = -Infinity;
  for (const r of rows) {
    const v = f.num(r, "n_targets");
    xMin = Math.min(xMin, v);
    xMax = Math.max(xMax, v);
  }
  const x = linearScale(xMin, xMax, AREA.x + 20, AREA.x + AREA.w - 10);
  const y = linearScale(0, 1, AREA.y + AREA.h, AREA.y);
  const series: SeriesSpec[] = transports.map((t, i) => {
    const mine = rows.filter((r) => f.cell(r, "transport") === t);
    return {
      name: t,
      xRaw: mine.map((r) => f.cell(r, "n_targets")),
      yRaw: mine.map((r) => f.cell(r, "combined_efficiency")),
      yVals: mine.map((r) => f.num(r, "combined_efficiency")),
      xPos: mine.map((r) => x(f.num(r, "n_targets"))),
      color: seriesColor(i),
      opacity: 1,
      width: 2,
    };
  });
  const root = svgRoot(W, H);
  polylineMarks(root.child("g").attr("class", "marks"), "combined_efficiency",
    "n_targets", series, y);
  const xTicks = [2, 8, 16, 24, 32]
    .filter((v) => v >= xMin && v <= xMax)
    .map((v) => ({ pos: x(v), label: String(v) }));
  const yTicks = [0, 0.2, 0.4, 0.6, 0.8, 1].map((v) => ({ pos: y(v), label: fmt(v) }));
  drawAxes(root, AREA, xTicks, yTicks, "targets per request",
    "payload efficiency", `Payload efficiency at ${granularity} B granularity`);
  drawLegend(
    root,
    series.map((s) => ({ label: s.name, color: s.color })),
    AREA.x + AREA.w - 150,
    AREA.y + AREA.h - 40,
  );
  return finish(root);
}

/** Per-link busy fraction over time, one faint line per link. */
export function figUtilization(text: string): string {
  const f = loadFrame("utilization", text).require("link", "bin_us", "busy_ps");
  const links = f.distinct("link");
  let xMax = 0;
  for (const row of f.rows) xMax = Math.max(xMax, f.num(row, "bin_us"));
  const x = linearScale(0, Math.max(xMax, 1), AREA.x, AREA.x + AREA.w);
  const y = linearScale(0, 1.05, AREA.y + AREA.h, AREA.y);
  const series: SeriesSpec[] = links.map((link) => {
    const mine = f.rows.filter((r) => f.cell(r, "link") === link);
    const up = link.startsWith("up");
    return {
      name: link,
      xRaw: mine.map((r) => f.cell(r, "bin_us")),
      yRaw: mine.map((r) => f.cell(r, "busy_ps")),
      yVals: mine.map((r) => f.num(r, "busy_ps") / 1e6),
      xPos: mine.map((r) => x(f.num(r, "bin_us"))),
      color: up ? seriesColor(0) : seriesColor(1),
      opacity: 0.3,
      width: 1,
    };
  });
  const root = svgRoot(W, H);
  polylineMarks(root.child("g").attr("class", "marks"), "busy_ps", "bin_us", series, y);
  const xTicks = niceTicks(Math.max(xMax, 1)).map((v) => ({ pos: x(v), label: fmt(v) }));
  const yTicks = [0, 0.25, 0.5, 0.75, 1].map((v) => ({ pos: y(v), label: fmt(v) }));
  drawAxes(root, AREA, xTicks, yTicks, "time (us)", "link busy fraction per 1 us window",
    "Link utilization over time");
  drawLegend(
    root,
    [
      { label: "uplinks", color: seriesColor(0) },
      { label: "downlinks", color: seriesColor(1) },
    ],
    AREA.x + AREA.w - 110,
    AREA.y + 6,
  );
  return finish(root);
}

function sweepSeries(
  f: Frame,
  yCol: string,
  yDiv: number,
  centers: number[],
  values: string[],
): SeriesSpec[] {
  const methods = f.distinct("method");
  return methods.map((m, i) => {
    const mine = f.rows.filter((r) => f.cell(r, "method") === m);
    return {
      name: m,
      xRaw: mine.map((r) => f.cell(r, "value")),
      yRaw: mine.map((r) => f.cell(r, yCol)),
      yVals: mine.map((r) => f.num(r, yCol) / yDiv),
      xPos: mine.map((r) => at(centers, values.indexOf(f.cell(r, "value")))),
      color: seriesColor(i),
      opacity: 1,
      width: 2,
    };
  });
}

/** Completion time across one sweep axis, one line per method. */
export function figSensitivity(text: string): string {
  const f = loadFrame("sensitivity", text).require("axis", "value", "method", "total_ns");
  const axis = onlyAxis(f);
  const values = f.distinct("value");
  const centers = ordinalCenters(values.length, AREA);
  const series = sweepSeries(f, "total_ns", 1000, centers, values);
  let yMaxVal = 0;
  for (const s of series) for (const v of s.yVals) yMaxVal = Math.max(yMaxVal, v);
  const yMax = yMaxVal * 1.08;
  const y = linearScale(0, yMax, AREA.y + AREA.h, AREA.y);
  const root = svgRoot(W, H);
  const marks = root.child("g").attr("class", "marks");
  polylineMarks(marks, "total_ns", "value", series, y);
  for (const s of series) {
    s.xPos.forEach((px, i) => {
      marks
        .child("circle")
        .attr("cx", px)
        .attr("cy", y(at(s.yVals, i)))
        .attr("r", 3)
        .attr("fill", s.color);
    });
  }
  const xTicks = values.map((v, i) => ({ pos: at(centers, i), label: v }));
  drawAxes(root, AREA, xTicks, yTicksFor(yMax, y, ""), axis, "completion time (us)",
    `Completion time vs ${axis}`);
  drawLegend(
    root,
    series.map((s) => ({ label: s.name, color: s.color })),
    AREA.x + 8,
    AREA.y + 6,
  );
  return finish(root);
}

/** Design-space curve: one rate column across a capacity axis. */
export function figDse(text: string, yCol: string, yLabel: string): string {
  const f = loadFrame("dse", text).require("axis", "value", "method", yCol);
  const axis = onlyAxis(f);
  const values = f.distinct("value");
  const centers = ordinalCenters(values.length, AREA);
  const series = sweepSeries(f, yCol, 1, centers, values);
  const y = linearScale(0, 1.05, AREA.y + AREA.h, AREA.y);
  const root = svgRoot(W, H);
  const marks = root.child("g").attr("class", "marks");
  polylineMarks(marks, yCol, "value", series, y);
  for (const s of series) {
    s.xPos.forEach((px, i) => {
      const py = y(at(s.yVals, i));
      marks
        .child("circle")
        .attr("cx", px)
        .attr("cy", py)
        .attr("r", 3)
        .attr("fill", s.color);
      marks
        .child("text")
        .attr("x", px)
        .attr("y", py - 8)
        .attr("text-anchor", "middle")
        .attr("font-size", 8)
        .text(fmt(at(s.yVals, i)));
    });
  }
  const xTicks = values.map((v, i) => ({ pos: at(centers, i), label: v }));
  const yTicks = [0, 0.25, 0.5, 0.75, 1].map((v) => ({ pos: y(v), label: fmt(v) }));
  drawAxes(root, AREA, xTicks, yTicks, axis, yLabel, `${yLabel} vs ${axis}`);
  drawLegend(
    root,
    series.map((s) => ({ label: s.name, color: s.color })),
    AREA.x + AREA.w - 150,
    AREA.y + AREA.h - 30,
  );
  return finish(root);
}
