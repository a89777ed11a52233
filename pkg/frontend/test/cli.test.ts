import { describe, expect, it } from "vitest";
import { existsSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { main, parseArgs, resolveCollision } from "../src/cli.js";

const sample = join(dirname(fileURLToPath(import.meta.url)), "..", "sample");

describe("parseArgs", () => {
  it("requires a known kind", () => {
    expect(parseArgs(["--kind", "pie", "--out", "x.svg", "r.json"]).error)
      .toMatch(/kind/);
  });

  it("requires an output path", () => {
    expect(parseArgs(["--kind", "ge_rate", "r.json"]).error).toMatch(/--out/);
  });

  it("requires at least one report", () => {
    expect(parseArgs(["--kind", "ge_rate", "--out", "x.svg"]).error)
      .toMatch(/report/);
  });

  it("accepts a full invocation", () => {
    const { spec } = parseArgs([
      "--kind", "ede_balance", "--out", "x.svg", "a.json", "b.json",
    ]);
    expect(spec).toEqual({
      kind: "ede_balance",
      out: "x.svg",
      reports: ["a.json", "b.json"],
    });
  });
});

describe("resolveCollision", () => {
  it("suffixes instead of overwriting", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const p = join(dir, "fig.svg");
    expect(resolveCollision(p)).toBe(p);
    writeFileSync(p, "x");
    expect(resolveCollision(p)).toBe(join(dir, "fig-1.svg"));
    writeFileSync(join(dir, "fig-1.svg"), "x");
    expect(resolveCollision(p)).toBe(join(dir, "fig-2.svg"));
  });
});

describe("main", () => {
  it("renders a figure end to end and never overwrites", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const out = join(dir, "fig.svg");
    const argv = [
      "--kind", "fisher_ratio", "--out", out,
      join(sample, "fisher_nonconvex.json"),
    ];
    expect(main(argv)).toBe(0);
    expect(existsSync(out)).toBe(true);
    expect(main(argv)).toBe(0);
    expect(existsSync(join(dir, "fig-1.svg"))).toBe(true);
  });

  it("exits 2 on usage error", () => {
    expect(main([])).toBe(2);
  });

  it("exits 2 on a missing report file", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    expect(
      main(["--kind", "ge_rate", "--out", join(dir, "f.svg"), "missing.json"]),
    ).toBe(2);
  });

  it("exits 2 on mixed checksums", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    expect(
      main([
        "--kind", "fisher_ratio", "--out", join(dir, "f.svg"),
        join(sample, "fisher_nonconvex.json"),
        join(sample, "exact_chain_rule.json"),
      ]),
    ).toBe(2);
  });
});
