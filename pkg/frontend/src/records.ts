/**
 * Client-side roster of candidate query records.
 *
 * The service never returns stored vectors, so "query by record" works off
 * the same record lines the operator uploaded: paste them here, pick an id,
 * and the record's vector becomes the query while its label (when present)
 * drives match/mismatch highlighting.
 */

export interface RosterRecord {
  id: string;
  vector: number[];
  label: string | null;
}

/** Parse record lines (snapshot headers are skipped). Throws with a 1-based line number. */
export function parseRosterLines(text: string): RosterRecord[] {
  const records: RosterRecord[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error(`line ${i + 1}: not valid JSON`);
    }
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
      throw new Error(`line ${i + 1}: not a record object`);
    }
    const rec = obj as Record<string, unknown>;
    if (rec.id === undefined && rec.checksum !== undefined) continue; // snapshot header line
    if (typeof rec.id !== "string" || !Array.isArray(rec.vector)) {
      throw new Error(`line ${i + 1}: record needs "id" and "vector"`);
    }
    const vector = rec.vector.map((x, j) => {
      const v = Number(x);
      if (!Number.isFinite(v)) {
        throw new Error(`line ${i + 1}: vector entry ${j} is not a finite number`);
      }
      return v;
    });
    records.push({
      id: rec.id,
      vector,
      label: typeof rec.label === "string" ? rec.label : null,
    });
  }
  return records;
}

/** Parse a pasted query vector: numbers separated by commas and/or whitespace. */
export function parseVectorText(text: string): number[] {
  const parts = text.split(/[\s,]+/).filter((p) => p.length > 0);
  if (parts.length === 0) throw new Error("empty query vector");
  return parts.map((p) => {
    const v = Number(p);
    if (!Number.isFinite(v)) throw new Error(`not a number: ${JSON.stringify(p)}`);
    return v;
  });
}
