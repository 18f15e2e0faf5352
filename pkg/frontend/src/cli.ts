#!/usr/bin/env node
/** Figure renderer CLI.
 *
 * Usage:
 *   safebandit-figures --kind trace --input out/trace.csv --output fig.svg
 *   safebandit-figures --kind sweep --metric rho_inf --input out/sweep.csv --output rho.svg
 *
 * Exit codes: 0 success, 1 bad invocation or schema mismatch, 2 I/O failure.
 */

import { parseArgs } from "node:util";

import { IoError, SchemaError } from "./errors.js";
import { FigureKind } from "./figures.js";
import { render } from "./render.js";

const KINDS: FigureKind[] = [
  "trace",
  "handicap_curve",
  "rho_curve",
  "histogram",
  "sweep",
];

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        input: { type: "string" },
        output: { type: "string" },
        meta: { type: "string" },
        metric: { type: "string" },
        bins: { type: "string" },
        title: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  const values = parsed.values;
  if (values.help) {
    console.log(
      `usage: safebandit-figures --kind <${KINDS.join("|")}> ` +
        "--input <csv> --output <svg> [--meta <json>] " +
        "[--metric nhandicap_inf|rho_inf] [--bins N] [--title text]",
    );
    return 0;
  }
  const kind = values.kind as FigureKind | undefined;
  if (!kind || !KINDS.includes(kind)) {
    console.error(`error: --kind must be one of ${KINDS.join(", ")}`);
    return 1;
  }
  if (!values.input || !values.output) {
    console.error("error: --input and --output are required");
    return 1;
  }
  if (values.metric && !["nhandicap_inf", "rho_inf"].includes(values.metric)) {
    console.error("error: --metric must be nhandicap_inf or rho_inf");
    return 1;
  }
  try {
    const written = render({
      kind,
      inputPath: values.input,
      outputPath: values.output,
      metaPath: values.meta,
      options: {
        metric: values.metric as "nhandicap_inf" | "rho_inf" | undefined,
        bins: values.bins ? Number(values.bins) : undefined,
        title: values.title,
      },
    });
    console.log(`wrote ${written}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    if (err instanceof IoError) {
      console.error(`io error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${err}`);
    return 2;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
