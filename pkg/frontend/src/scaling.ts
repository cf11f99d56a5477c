/** Least-squares slope of log(seconds) against log(d). */

export function scalingFit(points: Array<[number, number]>): number {
  if (points.length < 3) {
    throw new Error(`need at least 3 points, got ${points.length}`);
  }
  for (const [d, s] of points) {
    if (!(d > 0) || !(s > 0)) {
      throw new Error(`dimensions and timings must be positive (got ${d}, ${s})`);
    }
  }
  const xs = points.map(([d]) => Math.log(d));
  const ys = points.map(([, s]) => Math.log(s));
  const mx = xs.reduce((a, b) => a + b, 0) / xs.length;
  const my = ys.reduce((a, b) => a + b, 0) / ys.length;
  let num = 0;
  let den = 0;
  for (let i = 0; i < xs.length; i++) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) ** 2;
  }
  return num / den;
}
