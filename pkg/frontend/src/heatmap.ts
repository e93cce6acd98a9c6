/**
 * heatmap.ts — the white→green score ramp and slot column labels.
 *
 * The ramp is fixed to the absolute interval [0, 1] rather than per-task
 * normalized, so a 0.6 cell looks identical in every task.
 */

const HI = { r: 0, g: 105, b: 30 }; // darkest green at p = 1

/** Monotone white→green color for a success score; out-of-range p clamps. */
export function colorForScore(p: number): string {
  const t = Math.min(1, Math.max(0, p));
  const r = Math.round(255 + (HI.r - 255) * t);
  const g = Math.round(255 + (HI.g - 255) * t);
  const b = Math.round(255 + (HI.b - 255) * t);
  return `rgb(${r}, ${g}, ${b})`;
}

/** Relative luminance of the ramp at p, for contrast decisions. */
export function rampLuminance(p: number): number {
  const t = Math.min(1, Math.max(0, p));
  const r = 255 + (HI.r - 255) * t;
  const g = 255 + (HI.g - 255) * t;
  const b = 255 + (HI.b - 255) * t;
  return (0.2126 * r + 0.7152 * g + 0.0722 * b) / 255;
}

/** Dark text on light cells, white text once the green gets deep. */
export function textColorFor(p: number): string {
  return rampLuminance(p) > 0.55 ? "#183018" : "#ffffff";
}

const HALF_DAYS = ["Mon", "Tue", "Wed", "Thu", "Fri"].flatMap((d) => [
  `${d} AM`,
  `${d} PM`,
]);

/** Weekday half-day labels for the standard 10-slot week, else generic. */
export function slotLabels(k: number): string[] {
  if (k === HALF_DAYS.length) return [...HALF_DAYS];
  return Array.from({ length: k }, (_, j) => `Slot ${j + 1}`);
}
