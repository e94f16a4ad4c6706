/**
 * Reader for the simulator's CSV artifacts.
 *
 * Dialect: comma-separated, '.' decimal point, one header row, LF line
 * endings. Every data cell is numeric.
 */

import { readFileSync } from "node:fs";

export class CsvError extends Error {}

/** Required columns are absent; the message names the file and the columns. */
export class MissingColumnsError extends CsvError {
  readonly file: string;
  readonly missing: string[];

  constructor(file: string, missing: string[]) {
    super(`${file}: missing column(s): ${missing.join(", ")}`);
    this.file = file;
    this.missing = missing;
  }
}

export type Columns = Map<string, number[]>;

export function parseColumns(text: string, file: string, required: string[] = []): Columns {
  const lines = text.split("\n");
  while (lines.length > 0 && lines[lines.length - 1].trim() === "") lines.pop();

  // An empty file has no header row, so every required column is missing.
  const header = lines.length > 0 ? lines[0].split(",").map((h) => h.trim()) : [];
  const missing = required.filter((name) => !header.includes(name));
  if (missing.length > 0) throw new MissingColumnsError(file, missing);

  const cols: Columns = new Map(header.map((h) => [h, [] as number[]]));
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new CsvError(`${file}:${i + 1}: expected ${header.length} cells, got ${cells.length}`);
    }
    for (let j = 0; j < header.length; j++) {
      const raw = cells[j].trim();
      const v = Number(raw);
      if (raw === "" || Number.isNaN(v)) {
        throw new CsvError(`${file}:${i + 1}: column ${header[j]}: not a number: "${raw}"`);
      }
      cols.get(header[j])!.push(v);
    }
  }
  return cols;
}

export function readColumns(file: string, required: string[] = []): Columns {
  return parseColumns(readFileSync(file, "utf-8"), file, required);
}
