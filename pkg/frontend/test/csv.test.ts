import { describe, expect, it } from "vitest";

import { CsvError, MissingColumnsError, parseColumns } from "../src/csv.js";

describe("parseColumns", () => {
  it("reads the header row and numeric columns", () => {
    const cols = parseColumns("t,ell\n0.0,0.0\n0.5,0.25\n", "a.csv");
    expect([...cols.keys()]).toEqual(["t", "ell"]);
    expect(cols.get("t")).toEqual([0.0, 0.5]);
    expect(cols.get("ell")).toEqual([0.0, 0.25]);
  });

  it("tolerates a missing trailing newline", () => {
    const cols = parseColumns("x\n1.5", "a.csv");
    expect(cols.get("x")).toEqual([1.5]);
  });

  it("reports every missing required column with the file name", () => {
    expect(() => parseColumns("t,atom_mass\n0,0\n", "runs/ell.csv", ["t", "ell"])).toThrowError(
      /runs\/ell\.csv: missing column\(s\): ell/,
    );
  });

  it("treats an empty file as missing all required columns", () => {
    let err: unknown;
    try {
      parseColumns("", "empty.csv", ["t", "ell"]);
    } catch (e) {
      err = e;
    }
    expect(err).toBeInstanceOf(MissingColumnsError);
    expect((err as MissingColumnsError).missing).toEqual(["t", "ell"]);
    expect((err as Error).message).toContain("empty.csv");
    expect((err as Error).message).toContain("t, ell");
  });

  it("rejects ragged rows with a line number", () => {
    expect(() => parseColumns("a,b\n1,2\n3\n", "r.csv")).toThrowError(/r\.csv:3: expected 2 cells, got 1/);
  });

  it("rejects non-numeric cells naming the column", () => {
    expect(() => parseColumns("a,b\n1,oops\n", "r.csv")).toThrowError(/r\.csv:2: column b: not a number/);
    expect(() => parseColumns("a\nNaN\n1\n", "r.csv")).toThrowError(CsvError);
  });

  it("rejects empty cells (Number('') would silently read as 0)", () => {
    expect(() => parseColumns("a,b\n1,\n", "r.csv")).toThrowError(/column b/);
  });
});
