import { existsSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, afterEach, describe, expect, it, vi } from "vitest";

import { SpecError } from "../src/figspec.js";
import { runCli, specFromArgv } from "../src/main.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");
const tmp = mkdtempSync(join(tmpdir(), "cli-"));
afterAll(() => rmSync(tmp, { recursive: true, force: true }));
afterEach(() => vi.restoreAllMocks());

function quiet(): void {
  vi.spyOn(console, "log").mockImplementation(() => {});
  vi.spyOn(console, "error").mockImplementation(() => {});
}

describe("flag invocation", () => {
  it("renders a figure from flags alone", () => {
    quiet();
    const out = join(tmp, "flags.svg");
    const code = runCli([
      "--kind", "trajectories",
      "--input", join(FIXTURES, "fig1", "fig1_alpha_1.csv"),
      "--input", join(FIXTURES, "fig1", "fig1_alpha_2.csv"),
      "--label", "alpha = 1",
      "--label", "alpha = 2",
      "--title", "pushing",
      "--x-range", "0:1",
      "--output", out,
    ]);
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf-8");
    expect(svg.match(/class="curve"/g)).toHaveLength(2);
    // sidecar autodetected next to fig1_alpha_2.csv
    expect(svg.match(/class="breakdown-marker"/g)).toHaveLength(1);
  });

  it("passes bins and scale through to the histogram", () => {
    quiet();
    const out = join(tmp, "hist.svg");
    const code = runCli([
      "--kind", "density_overlay",
      "--input", join(FIXTURES, "fig2", "fig2_stationary_samples.csv"),
      "--input", join(FIXTURES, "fig2", "fig2_stationary_profile.csv"),
      "--bins", "25",
      "--scale", "1",
      "--output", out,
    ]);
    expect(code).toBe(0);
    const d = readFileSync(out, "utf-8").match(/<path class="hist"[^>]* d="([^"]*)"/)![1];
    expect(d.match(/L /g)).toHaveLength(2 * 25 + 1);
  });

  it("exits 2 on a bad kind and on unknown flags", () => {
    quiet();
    expect(runCli(["--kind", "pie", "--input", join(FIXTURES, "poc", "poc_errors.csv"), "--output", "x.svg"])).toBe(2);
    expect(runCli(["--bogus"])).toBe(2);
    expect(runCli([])).toBe(2);
  });

  it("exits 3 when an input exists but its columns are unusable", () => {
    quiet();
    const bad = join(tmp, "bad.csv");
    writeFileSync(bad, "");
    expect(runCli(["--kind", "trajectories", "--input", bad, "--output", join(tmp, "x.svg")])).toBe(3);
  });
});

describe("figure-spec file invocation", () => {
  it("renders from a JSON spec with per-input breakdown sidecars", () => {
    quiet();
    const out = join(tmp, "fromspec.svg");
    const specPath = join(tmp, "fig.json");
    writeFileSync(
      specPath,
      JSON.stringify({
        kind: "trajectories",
        inputs: [
          { path: join(FIXTURES, "fig1", "fig1_alpha_0.5.csv"), label: "calm" },
          {
            path: join(FIXTURES, "fig1", "fig1_alpha_2.csv"),
            label: "breaks",
            breakdown: join(FIXTURES, "fig1", "fig1_alpha_2_breakdown.json"),
          },
        ],
        output: out,
        title: "from spec file",
        yLabel: "averaged pushing",
      }),
    );
    expect(runCli([specPath])).toBe(0);
    expect(existsSync(out)).toBe(true);
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain("averaged pushing");
    expect([...svg.matchAll(/<circle class="breakdown-marker" data-label="([^"]*)"/g)].map((m) => m[1])).toEqual([
      "breaks",
    ]);
  });

  it("refuses to mix a spec file with --kind flags", () => {
    expect(() => specFromArgv(["fig.json", "--kind", "trajectories"])).toThrowError(SpecError);
  });

  it("exits 2 when the spec file is missing", () => {
    quiet();
    expect(runCli([join(tmp, "absent.json")])).toBe(2);
  });
});

describe("log-axis ranges", () => {
  it("rejects a zero lower bound on log-log figures with exit 2", () => {
    vi.spyOn(console, "log").mockImplementation(() => {});
    vi.spyOn(console, "error").mockImplementation(() => {});
    const code = runCli([
      "--kind", "convergence",
      "--input", join(FIXTURES, "poc", "poc_errors.csv"),
      "--y-range", "0:1",
      "--output", join(tmp, "zz.svg"),
    ]);
    expect(code).toBe(2);
  });
});
