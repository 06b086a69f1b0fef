/** Display fidelity plumbing. The UI never computes domain numbers itself:
 * every figure on screen is a TracedValue extracted from a service response
 * by path, so contract tests can verify each displayed number against the
 * recorded response it came from. */

export interface TracedValue {
  /** The exact value from the response, untouched. */
  value: number;
  /** Which response the value came from, e.g. "step:2023". */
  source: string;
  /** JSON path inside that response, e.g. ["per_zone", "1", "I"]. */
  path: (string | number)[];
}

export function lookupPath(doc: unknown, path: (string | number)[]): unknown {
  let cur: unknown = doc;
  for (const key of path) {
    if (cur === null || typeof cur !== "object") {
      return undefined;
    }
    cur = (cur as Record<string | number, unknown>)[key];
  }
  return cur;
}

/** Extract a number from a response, recording its provenance. Throws when
 * the path does not resolve to a number: a traced value must always be a
 * real response field. */
export function trace(
  doc: unknown,
  source: string,
  path: (string | number)[],
): TracedValue {
  const value = lookupPath(doc, path);
  if (typeof value !== "number") {
    throw new Error(
      `response field ${source}:${path.join(".")} is not a number: ${String(value)}`,
    );
  }
  return { value, source, path };
}

/** Full-precision display text; the value itself is never rounded away —
 * formatting is presentation only and tests compare `value`. */
export function display(t: TracedValue, fractionDigits = 2): string {
  return t.value.toLocaleString("en-US", {
    minimumFractionDigits: 0,
    maximumFractionDigits: fractionDigits,
  });
}
