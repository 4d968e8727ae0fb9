/** Viridis-like colormap from a small stop table with linear interpolation. */

const STOPS: Array<[number, number, number]> = [
  [68, 1, 84],
  [71, 44, 122],
  [59, 81, 139],
  [44, 113, 142],
  [33, 144, 141],
  [39, 173, 129],
  [92, 200, 99],
  [170, 220, 50],
  [253, 231, 37],
];

export function viridis(t: number): string {
  const u = Math.min(1, Math.max(0, t)) * (STOPS.length - 1);
  const i = Math.min(STOPS.length - 2, Math.floor(u));
  const f = u - i;
  const c = STOPS[i].map((a, k) => Math.round(a + f * (STOPS[i + 1][k] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

/** Quantize a value into one of n bands over [lo, hi] (filled-contour look). */
export function bandColor(v: number, lo: number, hi: number, bands: number): string {
  if (hi <= lo) return viridis(0.5);
  const t = (v - lo) / (hi - lo);
  const band = Math.min(bands - 1, Math.max(0, Math.floor(t * bands)));
  return viridis((band + 0.5) / bands);
}
