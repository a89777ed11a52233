/** Command line: fisherflow-plots --kind K --out FILE report.json [...] */

import { existsSync, writeFileSync } from "node:fs";
import { basename, dirname, extname, join } from "node:path";

import { FigureKind, FigureSpec, render } from "./figures.js";
import { ReportError } from "./report.js";

const KINDS: FigureKind[] = [
  "fisher_ratio",
  "ede_balance",
  "ge_rate",
  "jko_convergence",
];

export interface Parsed {
  spec: FigureSpec | null;
  error?: string;
}

export function parseArgs(argv: string[]): Parsed {
  let kind: string | undefined;
  let out: string | undefined;
  let title: string | undefined;
  const reports: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i] as string;
    if (a === "--kind") kind = argv[++i];
    else if (a === "--out") out = argv[++i];
    else if (a === "--title") title = argv[++i];
    else if (a.startsWith("--")) return { spec: null, error: `unknown flag ${a}` };
    else reports.push(a);
  }
  if (!kind || !KINDS.includes(kind as FigureKind))
    return { spec: null, error: `--kind must be one of ${KINDS.join(", ")}` };
  if (!out) return { spec: null, error: "--out is required" };
  if (reports.length === 0)
    return { spec: null, error: "at least one report file is required" };
  const spec: FigureSpec = { kind: kind as FigureKind, reports, out };
  if (title !== undefined) spec.title = title;
  return { spec };
}

/** Never overwrite: existing targets get a -1, -2, ... suffix. */
export function resolveCollision(path: string): string {
  if (!existsSync(path)) return path;
  const dir = dirname(path);
  const ext = extname(path);
  const stem = basename(path, ext);
  for (let i = 1; ; i++) {
    const candidate = join(dir, `${stem}-${i}${ext}`);
    if (!existsSync(candidate)) return candidate;
  }
}

export function main(argv: string[]): number {
  const { spec, error } = parseArgs(argv);
  if (!spec) {
    process.stderr.write(`usage error: ${error}\n`);
    return 2;
  }
  try {
    const svg = render(spec);
    const target = resolveCollision(spec.out);
    writeFileSync(target, svg);
    process.stdout.write(`${target}\n`);
    return 0;
  } catch (e) {
    if (e instanceof ReportError || (e as NodeJS.ErrnoException).code === "ENOENT") {
      process.stderr.write(`error: ${(e as Error).message}\n`);
      return 2;
    }
    throw e;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
