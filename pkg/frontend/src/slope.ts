/** Least-squares slope of y against x (used on log-log pairs). */
export function leastSquaresSlope(x: number[], y: number[]): number {
  if (x.length !== y.length || x.length < 2) {
    throw new Error(`need at least two points for a slope fit, got ${x.length}`);
  }
  const n = x.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx === 0) {
    throw new Error("degenerate abscissae: all x values coincide");
  }
  return sxy / sxx;
}

/** Fitted order of log(error) against log(h). */
export function convergenceSlope(h: number[], err: number[]): number {
  const pairs = h
    .map((hi, i) => [hi, err[i]] as const)
    .filter(([hi, ei]) => hi > 0 && ei > 0);
  if (pairs.length < 2) {
    throw new Error("need at least two positive (h, error) pairs");
  }
  return leastSquaresSlope(
    pairs.map(([hi]) => Math.log(hi)),
    pairs.map(([, ei]) => Math.log(ei))
  );
}
