import * as fs from "node:fs";
import * as path from "node:path";

import { parseCsv } from "./csv.js";
import { IoError, SchemaError } from "./errors.js";
import {
  curveFigure,
  FigureKind,
  FigureOptions,
  histogramFigure,
  Sidecar,
  sweepFigure,
  traceFigure,
} from "./figures.js";

export interface PlotJob {
  kind: FigureKind;
  inputPath: string;
  outputPath: string;
  /** Metadata sidecar; discovered next to the input when omitted. */
  metaPath?: string;
  options?: FigureOptions;
}

const SIDECAR_NAMES = [
  "metadata.json",
  "trace_meta.json",
  "simulate_meta.json",
];

function findSidecar(inputPath: string, metaPath?: string): string {
  if (metaPath) {
    if (!fs.existsSync(metaPath)) {
      throw new SchemaError(`metadata sidecar not found: ${metaPath}`);
    }
    return metaPath;
  }
  const dir = path.dirname(inputPath);
  for (const name of SIDECAR_NAMES) {
    const candidate = path.join(dir, name);
    if (fs.existsSync(candidate)) return candidate;
  }
  throw new SchemaError(
    `no metadata sidecar (${SIDECAR_NAMES.join(", ")}) next to ${inputPath}; ` +
      "pass one explicitly",
  );
}

function readSidecar(sidecarPath: string): Sidecar {
  let text: string;
  try {
    text = fs.readFileSync(sidecarPath, "utf-8");
  } catch (err) {
    throw new IoError(`cannot read ${sidecarPath}: ${err}`);
  }
  try {
    return JSON.parse(text) as Sidecar;
  } catch (err) {
    throw new SchemaError(`${sidecarPath} is not valid JSON: ${err}`);
  }
}

/**
 * Render one figure. The input files are never modified; the output SVG is
 * written only after the figure builds, so a schema failure leaves no file.
 */
export function render(job: PlotJob): string {
  let text: string;
  try {
    text = fs.readFileSync(job.inputPath, "utf-8");
  } catch (err) {
    throw new IoError(`cannot read ${job.inputPath}: ${err}`);
  }
  const table = parseCsv(text);
  const meta = readSidecar(findSidecar(job.inputPath, job.metaPath));
  const options = job.options ?? {};
  let svg: string;
  switch (job.kind) {
    case "trace":
      svg = traceFigure(table, meta, options);
      break;
    case "handicap_curve":
    case "rho_curve":
      svg = curveFigure(table, meta, job.kind, options);
      break;
    case "histogram":
      svg = histogramFigure(table, meta, options);
      break;
    case "sweep":
      svg = sweepFigure(table, meta, options);
      break;
    default:
      throw new SchemaError(`unknown figure kind ${String(job.kind)}`);
  }
  try {
    fs.mkdirSync(path.dirname(job.outputPath), { recursive: true });
    fs.writeFileSync(job.outputPath, svg, "utf-8");
  } catch (err) {
    throw new IoError(`cannot write ${job.outputPath}: ${err}`);
  }
  return job.outputPath;
}
