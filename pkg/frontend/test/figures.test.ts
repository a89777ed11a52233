import { describe, expect, it } from "vitest";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { render } from "../src/figures.js";
import { loadReport } from "../src/report.js";

const here = dirname(fileURLToPath(import.meta.url));
const sample = join(here, "..", "sample");

describe("render", () => {
  it("fisher_ratio draws measured and reference curves", () => {
    const svg = render({
      kind: "fisher_ratio",
      reports: [join(sample, "fisher_nonconvex.json")],
      out: "unused.svg",
    });
    expect(svg).toContain("<svg");
    expect(svg).toContain("reference 4*S*sqrt(t/pi)");
    expect(svg).toContain("log_ratio_0");
    expect((svg.match(/<polyline/g) ?? []).length).toBeGreaterThanOrEqual(4);
  });

  it("ede_balance bars agree with the report defect", () => {
    const path = join(sample, "exact_chain_rule.json");
    const svg = render({ kind: "ede_balance", reports: [path], out: "u.svg" });
    expect((svg.match(/<rect x=/g) ?? []).length).toBe(2);
    // re-derive the balance the figure annotates and compare to the verdict
    const r = loadReport(path);
    const ent = r.series["entropy"]!;
    const fisher = r.series["fisher"]!;
    const t = r.series["t"]!;
    const drop = ent[0]! - ent[ent.length - 1]!;
    let integral = 0;
    for (let i = 1; i < t.length; i++)
      integral += 0.5 * (fisher[i]! + fisher[i - 1]!) * (t[i]! - t[i - 1]!);
    const defect = Math.abs(drop - integral) / integral;
    expect(defect).toBeLessThan(0.02);
    const verdict = r.verdicts.find((v) => v.name === "ede_balance")!;
    expect(defect).toBeCloseTo(verdict.measured, 6);
    expect(svg).toContain(`defect ${(defect * 100).toFixed(2)}%`);
  });

  it("ge_rate renders the rate series with its envelope", () => {
    const svg = render({
      kind: "ge_rate",
      reports: [join(sample, "gradient_estimate.json")],
      out: "u.svg",
    });
    expect(svg).toContain("measured");
    expect(svg).toContain("reference 4*S*sqrt(t/pi)");
  });

  it("jko_convergence renders from the CSV", () => {
    const svg = render({
      kind: "jko_convergence",
      reports: [join(sample, "jko_convergence.csv")],
      out: "u.svg",
    });
    expect(svg).toContain("O(tau) guide");
  });

  it("refuses mixed-checksum inputs", () => {
    expect(() =>
      render({
        kind: "fisher_ratio",
        reports: [
          join(sample, "fisher_nonconvex.json"),
          join(sample, "exact_chain_rule.json"),
        ],
        out: "u.svg",
      }),
    ).toThrow(/mix/);
  });

  it("refuses an empty report list", () => {
    expect(() =>
      render({ kind: "fisher_ratio", reports: [], out: "u.svg" }),
    ).toThrow(/no report/);
  });

  it("is read-only on its inputs", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const src = join(sample, "fisher_nonconvex.json");
    const copy = join(dir, "r.json");
    writeFileSync(copy, readFileSync(src));
    const before = readFileSync(copy, "utf-8");
    render({ kind: "fisher_ratio", reports: [copy], out: join(dir, "f.svg") });
    expect(readFileSync(copy, "utf-8")).toBe(before);
  });
});
