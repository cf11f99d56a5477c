/** The six figure renderers over the benchmark CSV bundle.
 *
 * Every renderer reads one CSV (by its standard name inside the input
 * directory), validates the columns it needs, and returns a standalone SVG
 * document.  Rendering is read-only and deterministic.
 */

import { join } from "node:path";
import { Table, column, numberedColumns, numericColumn, readCsv } from "./csv.js";
import { PALETTE, Panel, extent, svgDocument } from "./svg.js";
import { scalingFit } from "./scaling.js";

export const FIGURE_IDS = [
  "gain_scatter",
  "cpu_scaling",
  "np_vs_dim",
  "ship_track",
  "lorenz_track",
  "mc_rmse",
] as const;

export type FigureId = (typeof FIGURE_IDS)[number];

export const FIGURE_INPUTS: Record<FigureId, string> = {
  gain_scatter: "gain_compare.csv",
  cpu_scaling: "dim_timing.csv",
  np_vs_dim: "np_search.csv",
  ship_track: "filter_run.csv",
  lorenz_track: "filter_run.csv",
  mc_rmse: "filter_run.csv",
};

function methodColors(methods: string[]): Map<string, string> {
  return new Map(methods.map((m, i) => [m, PALETTE[i % PALETTE.length]]));
}

function uniqueInOrder(values: string[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const v of values) {
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}

export function renderGainScatter(table: Table, file: string): string {
  const W = 900;
  const H = 640;
  if (table.rows.length === 0) {
    return svgDocument(W, H, new Panel(W, H, { xMin: 0, xMax: 1, yMin: 0, yMax: 1 }).axes("coordinate", "gain").render());
  }
  const comp = numericColumn(table, "component", file);
  const method = column(table, "method", file);
  const value = numericColumn(table, "value", file);
  const exact = numericColumn(table, "exact_value", file);
  const coords = [numericColumn(table, "coord_1", file), numericColumn(table, "coord_2", file)];
  const methods = uniqueInOrder(method);
  const colors = methodColors(methods);
  const parts: string[] = [];
  const pw = W / 2;
  const ph = H / 2;
  for (const c of [1, 2]) {
    for (const axis of [0, 1]) {
      const keep = comp.map((v, i) => (v === c ? i : -1)).filter((i) => i >= 0);
      const xs = keep.map((i) => coords[axis][i]);
      const ysAll = keep.map((i) => value[i]).concat(keep.map((i) => exact[i]));
      const [xMin, xMax] = extent(xs);
      const [yMin, yMax] = extent(ysAll);
      const panel = new Panel(pw, ph, { xMin, xMax, yMin, yMax }, axis * pw, (c - 1) * ph);
      panel.axes(`x${axis + 1}`, `K_${c}`, `component ${c} vs x${axis + 1}`);
      for (const m of methods) {
        const idx = keep.filter((i) => method[i] === m);
        panel.dots(idx.map((i) => coords[axis][i]), idx.map((i) => value[i]), colors.get(m)!);
      }
      panel.dots(keep.map((i) => coords[axis][i]), keep.map((i) => exact[i]), "#000000", 1.6);
      if (c === 1 && axis === 1) {
        panel.legend(methods.map((m) => [m, colors.get(m)!] as [string, string]).concat([["exact", "#000"]]));
      }
      parts.push(panel.render());
    }
  }
  return svgDocument(W, H, parts.join("\n"));
}

export function renderCpuScaling(table: Table, file: string): string {
  const W = 640;
  const H = 480;
  if (table.rows.length === 0) {
    return svgDocument(W, H, new Panel(W, H, { xMin: 1, xMax: 10, yMin: 0.1, yMax: 1 }, 0, 0, true, true).axes("dimension", "gain build seconds").render());
  }
  const dims = numericColumn(table, "dim", file);
  const secs = numericColumn(table, "gain_build_s", file);
  const pts = dims.map((d, i) => [d, secs[i]] as [number, number]);
  const panel = new Panel(
    W,
    H,
    { xMin: Math.min(...dims) * 0.8, xMax: Math.max(...dims) * 1.25, yMin: Math.min(...secs) * 0.5, yMax: Math.max(...secs) * 2 },
    0,
    0,
    true,
    true,
  );
  panel.axes("dimension", "gain build seconds", "complexity scaling");
  panel.polyline(dims, secs, PALETTE[0]);
  panel.dots(dims, secs, PALETTE[0], 3.2);
  if (pts.length >= 3) {
    panel.annotate(`slope ${scalingFit(pts).toFixed(2)}`);
  }
  return svgDocument(W, H, panel.render());
}

export function renderNpVsDim(table: Table, file: string): string {
  const W = 640;
  const H = 480;
  if (table.rows.length === 0) {
    return svgDocument(W, H, new Panel(W, H, { xMin: 0, xMax: 1, yMin: 0, yMax: 1 }).axes("dimension", "particles").render());
  }
  const dims = numericColumn(table, "dim", file);
  const np = numericColumn(table, "required_np", file);
  const target = numericColumn(table, "target", file);
  const keep = np.map((v, i) => (v > 0 ? i : -1)).filter((i) => i >= 0);
  const xs = keep.map((i) => dims[i]);
  const ys = keep.map((i) => np[i]);
  const [xMin, xMax] = extent(xs.length ? xs : [0, 1]);
  const [yMin, yMax] = extent(ys.length ? ys : [0, 1]);
  const panel = new Panel(W, H, { xMin, xMax, yMin: Math.min(0, yMin), yMax }, 0, 0);
  panel.axes("dimension", "particles needed", `particles for MRE <= ${target[0] ?? "target"}`);
  panel.polyline(xs, ys, PALETTE[1]);
  panel.dots(xs, ys, PALETTE[1], 3.2);
  return svgDocument(W, H, panel.render());
}

interface Trajectories {
  methods: string[];
  t: number[];
  truth: number[][];
  byMethod: Map<string, number[][]>;
  trials: Map<string, Map<number, { truth: number[][]; est: number[][] }>>;
}

function splitTrajectories(table: Table, file: string): Trajectories {
  const trial = numericColumn(table, "trial", file);
  const t = numericColumn(table, "t", file);
  const method = column(table, "method", file);
  const truthCols = numberedColumns(table, "truth_", file);
  const estCols = numberedColumns(table, "est_", file);
  const methods = uniqueInOrder(method);
  const d = truthCols.length;
  const first = methods[0];
  const t0: number[] = [];
  const truth: number[][] = Array.from({ length: d }, () => []);
  const byMethod = new Map<string, number[][]>(
    methods.map((m) => [m, Array.from({ length: d }, () => [] as number[])]),
  );
  const trials = new Map<string, Map<number, { truth: number[][]; est: number[][] }>>();
  for (let i = 0; i < t.length; i++) {
    if (trial[i] === 0 && method[i] === first) {
      t0.push(t[i]);
      for (let l = 0; l < d; l++) truth[l].push(truthCols[l][i]);
    }
    if (trial[i] === 0) {
      const dst = byMethod.get(method[i])!;
      for (let l = 0; l < d; l++) dst[l].push(estCols[l][i]);
    }
    let perMethod = trials.get(method[i]);
    if (!perMethod) {
      perMethod = new Map();
      trials.set(method[i], perMethod);
    }
    let rec = perMethod.get(trial[i]);
    if (!rec) {
      rec = { truth: Array.from({ length: d }, () => []), est: Array.from({ length: d }, () => []) };
      perMethod.set(trial[i], rec);
    }
    for (let l = 0; l < d; l++) {
      rec.truth[l].push(truthCols[l][i]);
      rec.est[l].push(estCols[l][i]);
    }
  }
  return { methods, t: t0, truth, byMethod, trials };
}

export function renderShipTrack(table: Table, file: string): string {
  const W = 640;
  const H = 560;
  if (table.rows.length === 0) {
    return svgDocument(W, H, new Panel(W, H, { xMin: -1, xMax: 1, yMin: -1, yMax: 1 }).axes("x", "y").render());
  }
  const traj = splitTrajectories(table, file);
  // state is (angle, radius); display in the plane: x = r cos(a), y = r sin(a)
  const toXY = (series: number[][]) => {
    const xs = series[0].map((a, i) => series[1][i] * Math.cos(a));
    const ys = series[0].map((a, i) => series[1][i] * Math.sin(a));
    return [xs, ys] as const;
  };
  const [tx, ty] = toXY(traj.truth);
  const all: number[] = [...tx, ...ty];
  const colors = methodColors(traj.methods);
  const curves: Array<[string, readonly [number[], number[]]]> = [];
  for (const m of traj.methods) {
    const xy = toXY(traj.byMethod.get(m)!);
    curves.push([m, xy]);
    all.push(...xy[0], ...xy[1]);
  }
  const [lo, hi] = extent(all);
  const panel = new Panel(W, H, { xMin: lo, xMax: hi, yMin: lo, yMax: hi });
  panel.axes("x", "y", "trajectory overlay");
  panel.polyline(tx, ty, "#000", 2.0);
  for (const [m, [xs, ys]] of curves) {
    panel.polyline(xs, ys, colors.get(m)!, 1.4, "4 3");
  }
  panel.legend([["truth", "#000"], ...traj.methods.map((m) => [m, colors.get(m)!] as [string, string])]);
  return svgDocument(W, H, panel.render());
}

export function renderLorenzTrack(table: Table, file: string): string {
  const W = 820;
  const H = 720;
  if (table.rows.length === 0) {
    return svgDocument(W, H, new Panel(W, H, { xMin: 0, xMax: 1, yMin: 0, yMax: 1 }).axes("t", "x").render());
  }
  const traj = splitTrajectories(table, file);
  const d = traj.truth.length;
  const colors = methodColors(traj.methods);
  const ph = H / d;
  const parts: string[] = [];
  for (let l = 0; l < d; l++) {
    const ys = [...traj.truth[l]];
    for (const m of traj.methods) ys.push(...traj.byMethod.get(m)![l]);
    const [yMin, yMax] = extent(ys);
    const panel = new Panel(W, ph, { xMin: traj.t[0], xMax: traj.t[traj.t.length - 1], yMin, yMax }, 0, l * ph);
    panel.axes("t", `x${l + 1}`);
    panel.polyline(traj.t, traj.truth[l], "#000", 1.8);
    for (const m of traj.methods) {
      panel.polyline(traj.t, traj.byMethod.get(m)![l], colors.get(m)!, 1.2, "4 3");
    }
    if (l === 0) {
      panel.legend([["truth", "#000"], ...traj.methods.map((m) => [m, colors.get(m)!] as [string, string])]);
    }
    parts.push(panel.render());
  }
  return svgDocument(W, H, parts.join("\n"));
}

export function renderMcRmse(table: Table, file: string): string {
  const W = 640;
  const H = 480;
  if (table.rows.length === 0) {
    return svgDocument(W, H, new Panel(W, H, { xMin: 0, xMax: 1, yMin: 0, yMax: 1 }).axes("trial", "RMSE").render());
  }
  const traj = splitTrajectories(table, file);
  const colors = methodColors(traj.methods);
  const perMethod: Array<[string, number[], number[]]> = [];
  const allR: number[] = [];
  let maxTrial = 0;
  for (const m of traj.methods) {
    const xs: number[] = [];
    const rs: number[] = [];
    for (const [trial, rec] of traj.trials.get(m)!) {
      let sum = 0;
      let n = 0;
      for (let i = 1; i < rec.truth[0].length; i++) {
        let e2 = 0;
        for (let l = 0; l < rec.truth.length; l++) {
          e2 += (rec.truth[l][i] - rec.est[l][i]) ** 2;
        }
        sum += e2;
        n += 1;
      }
      xs.push(trial);
      rs.push(Math.sqrt(sum / Math.max(n, 1)));
      maxTrial = Math.max(maxTrial, trial);
    }
    perMethod.push([m, xs, rs]);
    allR.push(...rs);
  }
  const [yMin, yMax] = extent(allR);
  const panel = new Panel(W, H, { xMin: -0.5, xMax: maxTrial + 0.5, yMin: Math.min(0, yMin), yMax });
  panel.axes("trial", "RMSE", "per-trial RMSE");
  for (const [m, xs, rs] of perMethod) {
    panel.dots(xs, rs, colors.get(m)!, 3.4);
  }
  panel.legend(traj.methods.map((m) => [m, colors.get(m)!] as [string, string]));
  return svgDocument(W, H, panel.render());
}

export function renderFigure(figure: FigureId, inDir: string): string {
  const file = join(inDir, FIGURE_INPUTS[figure]);
  const table = readCsv(file);
  switch (figure) {
    case "gain_scatter":
      return renderGainScatter(table, file);
    case "cpu_scaling":
      return renderCpuScaling(table, file);
    case "np_vs_dim":
      return renderNpVsDim(table, file);
    case "ship_track":
      return renderShipTrack(table, file);
    case "lorenz_track":
      return renderLorenzTrack(table, file);
    case "mc_rmse":
      return renderMcRmse(table, file);
  }
}
