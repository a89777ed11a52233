/** The four figure kinds rendered from report files. */

import {
  Report,
  ReportError,
  assertSingleChecksum,
  convexityDefect,
  loadCsv,
  loadReport,
} from "./report.js";
import { Chart, color } from "./svg.js";

export type FigureKind =
  | "fisher_ratio"
  | "ede_balance"
  | "ge_rate"
  | "jko_convergence";

export interface FigureSpec {
  kind: FigureKind;
  /** Report JSON paths; for jko_convergence a single CSV path. */
  reports: string[];
  out: string;
  title?: string;
}

function need(r: Report, key: string, path: string): number[] {
  const s = r.series[key];
  if (!s) throw new ReportError(`${path}: series ${key} missing`);
  return s;
}

function trapezoid(t: number[], y: number[]): number {
  let acc = 0;
  for (let i = 1; i < t.length; i++) {
    acc +=
      0.5 *
      ((y[i] as number) + (y[i - 1] as number)) *
      ((t[i] as number) - (t[i - 1] as number));
  }
  return acc;
}

/** Fisher log-ratio vs sqrt(t) with the fitted and theoretical envelopes. */
function fisherRatio(reports: Report[], paths: string[], title?: string): string {
  const r = reports[0] as Report;
  const path = paths[0] as string;
  const t = need(r, "t", path);
  const rootT = t.map(Math.sqrt);
  const keys = Object.keys(r.series).filter((k) => k.startsWith("log_ratio"));
  if (keys.length === 0) throw new ReportError(`${path}: no log-ratio series`);
  const S = convexityDefect(r.config.domain);
  const reference = t.map((x) => 4 * S * Math.sqrt(x / Math.PI));

  const chart = new Chart();
  const all = keys.flatMap((k) => r.series[k] as number[]).concat(reference);
  chart.setDomains(
    [0, Math.max(...rootT)],
    [Math.min(0, ...all), Math.max(...all)],
  );
  chart.title(title ?? `Fisher growth envelope (${r.experiment})`);
  chart.axes("sqrt(t)", "log I(t)/I(0)");
  keys.forEach((k, i) =>
    chart.line(rootT, r.series[k] as number[], color(i), { label: k }),
  );
  chart.line(rootT, reference, "black", {
    dash: "6 3",
    label: "reference 4*S*sqrt(t/pi)",
  });
  if (r.fit) {
    const fitted = t.map((x) => r.fit!.alpha * Math.sqrt(x) + r.fit!.beta * x);
    chart.line(rootT, fitted, "#555", {
      dash: "2 3",
      label: `fit a=${r.fit.alpha.toFixed(2)}`,
    });
  }
  const ctrl = r.series["control_log_ratio"];
  if (ctrl) chart.line(rootT, ctrl, color(keys.length), { label: "convex control" });
  chart.legend();
  return chart.toString();
}

/** Entropy drop vs integrated Fisher information, as a two-bar balance. */
function edeBalance(reports: Report[], paths: string[], title?: string): string {
  const r = reports[0] as Report;
  const path = paths[0] as string;
  const t = need(r, "t", path);
  const ent = need(r, "entropy", path);
  const fisher = need(r, "fisher", path);
  const drop = (ent[0] as number) - (ent[ent.length - 1] as number);
  const integral = trapezoid(t, fisher);
  const defect = Math.abs(drop - integral) / Math.max(integral, 1e-300);

  const chart = new Chart(420, 420);
  chart.setDomains([0, 3], [0, Math.max(drop, integral) * 1.15]);
  chart.title(
    title ?? `Energy dissipation balance (defect ${(defect * 100).toFixed(2)}%)`,
  );
  chart.axes("", "nats", 4);
  chart.bar(1, 80, drop, color(0), "entropy drop");
  chart.bar(2, 80, integral, color(1), "integrated Fisher");
  return chart.toString();
}

/** Gradient-estimate rate: log lambda(t) vs sqrt(t) with the envelope. */
function geRate(reports: Report[], paths: string[], title?: string): string {
  const r = reports[0] as Report;
  const path = paths[0] as string;
  const t = need(r, "t", path);
  const lam = need(r, "lambda", path);
  const rootT = t.map(Math.sqrt);
  const logLam = lam.map((x) => Math.log(x));
  const S = convexityDefect(r.config.domain);
  const reference = t.map((x) => 4 * S * Math.sqrt(x / Math.PI));

  const chart = new Chart();
  chart.setDomains(
    [0, Math.max(...rootT)],
    [Math.min(0, ...logLam), Math.max(...logLam, ...reference)],
  );
  chart.title(title ?? "Semigroup gradient-estimate rate");
  chart.axes("sqrt(t)", "log lambda(t)");
  chart.line(rootT, logLam, color(0), { label: "measured" });
  chart.line(rootT, reference, "black", {
    dash: "6 3",
    label: "reference 4*S*sqrt(t/pi)",
  });
  if (r.fit) {
    const fitted = t.map((x) => r.fit!.alpha * Math.sqrt(x) + r.fit!.beta * x);
    chart.line(rootT, fitted, "#555", {
      dash: "2 3",
      label: `fit a=${r.fit.alpha.toFixed(2)}`,
    });
  }
  chart.legend();
  return chart.toString();
}

/** Scheme-vs-heat convergence in the step size, log-log. */
function jkoConvergence(csvPath: string, title?: string): string {
  const csv = loadCsv(csvPath);
  const tau = csv.columns["tau"];
  const err = csv.columns["l1_error"];
  if (!tau || !err)
    throw new ReportError(`${csvPath}: needs tau and l1_error columns`);
  const lx = tau.map(Math.log10);
  const ly = err.map(Math.log10);

  const chart = new Chart();
  chart.setDomains(
    [Math.min(...lx), Math.max(...lx)],
    [Math.min(...ly), Math.max(...ly)],
  );
  chart.title(title ?? "Proximal scheme vs heat flow");
  chart.axes("log10 tau", "log10 L1 error");
  chart.line(lx, ly, color(0), { label: "measured" });
  // first-order guide anchored at the coarsest step
  const y0 = ly[0] as number;
  const x0 = lx[0] as number;
  chart.line(lx, lx.map((x) => y0 + (x - x0)), "black", {
    dash: "6 3",
    label: "O(tau) guide",
  });
  chart.legend();
  return chart.toString();
}

export function render(spec: FigureSpec): string {
  if (spec.reports.length === 0)
    throw new ReportError("no report files given");
  if (spec.kind === "jko_convergence") {
    return jkoConvergence(spec.reports[0] as string, spec.title);
  }
  const reports = spec.reports.map((p) => loadReport(p));
  assertSingleChecksum(reports, spec.reports);
  switch (spec.kind) {
    case "fisher_ratio":
      return fisherRatio(reports, spec.reports, spec.title);
    case "ede_balance":
      return edeBalance(reports, spec.reports, spec.title);
    case "ge_rate":
      return geRate(reports, spec.reports, spec.title);
    default:
      throw new ReportError(`unknown figure kind ${spec.kind as string}`);
  }
}
