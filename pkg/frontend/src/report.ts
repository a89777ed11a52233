/** Parsing and validation of experiment report files (JSON + CSV). */

import { readFileSync } from "node:fs";

export interface Verdict {
  name: string;
  passed: boolean;
  measured: number;
  threshold: number;
}

export interface Fit {
  alpha: number;
  beta: number;
  residual: number;
  window: [number, number];
}

export interface DomainConfig {
  kind: "rectangle" | "polar_star";
  h: number;
  width?: number;
  height?: number;
  r0?: number;
  a?: number;
  k?: number;
}

export interface Report {
  experiment: string;
  config: { domain: DomainConfig; seed: number; [key: string]: unknown };
  mesh_checksum: string;
  series: Record<string, number[]>;
  fit: Fit | null;
  verdicts: Verdict[];
  wall_time: number;
}

export class ReportError extends Error {}

function fail(path: string, why: string): never {
  throw new ReportError(`${path}: ${why}`);
}

function isSeries(v: unknown): v is Array<number | null> {
  return Array.isArray(v) && v.every((x) => typeof x === "number" || x === null);
}

export function parseReport(text: string, path = "<string>"): Report {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    fail(path, `not JSON (${(e as Error).message})`);
  }
  const r = raw as Record<string, unknown>;
  if (typeof r !== "object" || r === null) fail(path, "not an object");
  if (typeof r.experiment !== "string") fail(path, "missing experiment name");
  if (typeof r.mesh_checksum !== "string") fail(path, "missing mesh checksum");
  if (typeof r.series !== "object" || r.series === null)
    fail(path, "missing series");
  const series: Record<string, number[]> = {};
  for (const [k, v] of Object.entries(r.series as object)) {
    if (!isSeries(v)) fail(path, `series ${k} is not numeric`);
    // null marks an undefined sample (e.g. speeds at curve endpoints)
    series[k] = v.map((x) => (x === null ? NaN : x));
  }
  if (!Array.isArray(r.verdicts)) fail(path, "missing verdicts");
  for (const v of r.verdicts as Array<Record<string, unknown>>) {
    if (typeof v.name !== "string" || typeof v.passed !== "boolean")
      fail(path, "malformed verdict");
  }
  const config = r.config as Report["config"] | undefined;
  if (!config || typeof config.domain !== "object")
    fail(path, "missing config.domain echo");
  return {
    experiment: r.experiment,
    config,
    mesh_checksum: r.mesh_checksum,
    series,
    fit: (r.fit ?? null) as Fit | null,
    verdicts: r.verdicts as Verdict[],
    wall_time: typeof r.wall_time === "number" ? r.wall_time : NaN,
  };
}

export function loadReport(path: string): Report {
  return parseReport(readFileSync(path, "utf-8"), path);
}

/** All reports feeding one figure must describe the same mesh. */
export function assertSingleChecksum(reports: Report[], paths: string[]): void {
  const sums = new Set(reports.map((r) => r.mesh_checksum));
  if (sums.size > 1) {
    throw new ReportError(
      `refusing to mix reports from different meshes: ` +
        `${[...sums].join(", ")} (${paths.join(", ")})`,
    );
  }
}

export interface Csv {
  header: string[];
  columns: Record<string, number[]>;
}

export function parseCsv(text: string, path = "<string>"): Csv {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) fail(path, "CSV needs a header and at least one row");
  const header = (lines[0] ?? "").split(",");
  const columns: Record<string, number[]> = {};
  for (const h of header) columns[h] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== header.length)
      fail(path, `row width ${cells.length} != header width ${header.length}`);
    cells.forEach((c, i) => {
      const x = Number(c);
      if (Number.isNaN(x) && c !== "nan") fail(path, `non-numeric cell ${c}`);
      columns[header[i] as string]?.push(x);
    });
  }
  return { header, columns };
}

export function loadCsv(path: string): Csv {
  return parseCsv(readFileSync(path, "utf-8"), path);
}

/**
 * Boundary convexity defect S for a domain echo: 0 for rectangles, and
 * max(0, -min curvature) of r(theta) = r0 + a*cos(k*theta) for stars.
 */
export function convexityDefect(d: DomainConfig): number {
  if (d.kind === "rectangle") return 0;
  const r0 = d.r0 ?? 1;
  const a = d.a ?? 0;
  const k = d.k ?? 1;
  let kmin = Infinity;
  const n = 8192;
  for (let i = 0; i < n; i++) {
    const t = (2 * Math.PI * i) / n;
    const r = r0 + a * Math.cos(k * t);
    const dr = -a * k * Math.sin(k * t);
    const ddr = -a * k * k * Math.cos(k * t);
    const kappa =
      (r * r + 2 * dr * dr - r * ddr) / Math.pow(r * r + dr * dr, 1.5);
    kmin = Math.min(kmin, kappa);
  }
  return Math.max(0, -kmin);
}
