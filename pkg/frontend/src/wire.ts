/** Helpers for the service's JSON dialect, where non-finite reals travel as strings. */

/** A real number as it appears on the wire. */
export type WireReal = number | "inf" | "-inf" | "nan";

/** Decode a wire real into a JS number. */
export function wireToNumber(value: unknown): number {
  if (typeof value === "number") return value;
  if (value === "inf") return Infinity;
  if (value === "-inf") return -Infinity;
  if (value === "nan") return NaN;
  throw new TypeError(`not a wire real: ${JSON.stringify(value)}`);
}

/**
 * Render a number for display using the wire spelling for non-finite values.
 * Finite values use the shortest decimal that parses back to the same
 * float64, so Number(formatReal(x)) === x always holds; the UI never shows
 * a number that differs from the value the service sent.
 */
export function formatReal(value: number): string {
  if (Number.isNaN(value)) return "nan";
  if (value === Infinity) return "inf";
  if (value === -Infinity) return "-inf";
  return String(value);
}
