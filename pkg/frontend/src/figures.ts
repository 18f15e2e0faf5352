import { column, requireColumns, Table } from "./csv.js";
import { SchemaError } from "./errors.js";
import {
  decimate,
  extentOf,
  legend,
  Panel,
  SERIES_COLORS,
  svgDocument,
} from "./svg.js";

export type FigureKind =
  | "trace"
  | "handicap_curve"
  | "rho_curve"
  | "histogram"
  | "sweep";

export interface FigureOptions {
  /** Metric plotted by the sweep figure. */
  metric?: "nhandicap_inf" | "rho_inf";
  bins?: number;
  title?: string;
}

/** Parsed metadata sidecar; shapes differ between single-run and experiment
 * outputs, so this is kept loose and probed field by field. */
export type Sidecar = Record<string, unknown>;

function captionFrom(meta: Sidecar): string {
  if (typeof meta.command === "string") {
    const arms = Array.isArray(meta.arms) ? meta.arms.join(",") : "?";
    return (
      `${meta.command}: arms=[${arms}] mu=${meta.mu} eps=${meta.eps} ` +
      `alpha=${meta.alpha} seed=${meta.seed} v${meta.package_version ?? "?"}`
    );
  }
  const spec = meta.spec as Record<string, unknown> | undefined;
  if (spec) {
    const law = spec.arm_law as Record<string, unknown> | undefined;
    const lawText =
      law?.kind === "uniform"
        ? `U(${law.low},${law.high})`
        : `${law?.kind ?? "?"}`;
    return (
      `N=${spec.arms} ${lawText} mu=${spec.mu} reps=${spec.replications} ` +
      `horizon=${spec.horizon} seed=${spec.master_seed} ` +
      `v${meta.package_version ?? "?"}`
    );
  }
  return "";
}

const MARGIN = { left: 70, right: 30, top: 40, bottom: 70 };

function panelBox(width: number, height: number, yOffset = 0, panelHeight?: number) {
  return {
    x: MARGIN.left,
    y: MARGIN.top + yOffset,
    width: width - MARGIN.left - MARGIN.right,
    height: (panelHeight ?? height - MARGIN.top - MARGIN.bottom) as number,
  };
}

export function traceFigure(
  table: Table,
  meta: Sidecar,
  options: FigureOptions,
): string {
  requireColumns(
    table,
    ["step", "arm", "pull", "outcome", "zeros", "log_lik"],
    "trace file",
  );
  const lambda0 = Number(meta.lambda0);
  const lambda1 = Number(meta.lambda1);
  const logThreshold = Number(meta.log_threshold);
  if (![lambda0, lambda1, logThreshold].every(Number.isFinite)) {
    throw new SchemaError(
      "trace figure needs lambda0, lambda1, log_threshold in the metadata sidecar",
    );
  }
  const arms = column(table, "arm");
  const pulls = column(table, "pull");
  const logLik = column(table, "log_lik");
  const zeros = column(table, "zeros");

  const width = 860;
  const height = 820;
  const panelH = 300;
  const top = new Panel(
    {
      ...panelBox(width, height, 0, panelH),
      xLabel: "",
      yLabel: "log-likelihood ratio",
      title: options.title ?? "Sequential test trace",
    },
    extentOf(pulls, 0.02),
    extentOf([...logLik, logThreshold], 0.08),
  );
  const bottom = new Panel(
    {
      ...panelBox(width, height, panelH + 80, panelH),
      xLabel: "pulls of the arm",
      yLabel: "zero returns",
    },
    extentOf(pulls, 0.02),
    extentOf(
      [...zeros, (logThreshold + lambda1 * Math.max(...pulls)) / (lambda0 + lambda1)],
      0.08,
    ),
  );

  const byArm = new Map<number, number[]>();
  arms.forEach((arm, i) => {
    if (!byArm.has(arm)) byArm.set(arm, []);
    byArm.get(arm)!.push(i);
  });
  const sortedArms = [...byArm.keys()].sort((a, b) => a - b);
  const legendEntries = [];
  for (const [rank, arm] of sortedArms.entries()) {
    const idx = byArm.get(arm)!;
    const color = SERIES_COLORS[rank % SERIES_COLORS.length];
    const px = idx.map((i) => pulls[i]);
    top.line(px, idx.map((i) => logLik[i]), color);
    bottom.line(px, idx.map((i) => zeros[i]), color);
    const crossAt = idx.find((i) => logLik[i] >= logThreshold);
    if (crossAt !== undefined) {
      top.marker(pulls[crossAt], logLik[crossAt], color, "crossing-marker");
    }
    legendEntries.push({ label: `arm ${arm}`, color });
  }
  // rejection lines: level log(1/alpha) above, its zero-count form below
  const xMax = Math.max(...pulls);
  top.line([0, xMax], [logThreshold, logThreshold], "#1f1fbf", {
    dashed: true,
    cssClass: "bound-line",
  });
  const ts = Array.from({ length: 120 }, (_, i) => (i / 119) * xMax);
  bottom.line(
    ts,
    ts.map((t) => (logThreshold + lambda1 * t) / (lambda0 + lambda1)),
    "#1f1fbf",
    { dashed: true, cssClass: "bound-line" },
  );
  legendEntries.push({ label: "rejection line", color: "#1f1fbf", dashed: true });

  const body =
    top.render() +
    "\n" +
    bottom.render() +
    "\n" +
    legend(width - 170, MARGIN.top + 8, legendEntries);
  return svgDocument(width, height, body, captionFrom(meta));
}

export function curveFigure(
  table: Table,
  meta: Sidecar,
  kind: "handicap_curve" | "rho_curve",
  options: FigureOptions,
): string {
  requireColumns(table, ["t", "mean", "stderr", "bound"], `${kind} file`);
  const t = column(table, "t");
  const mean = column(table, "mean");
  const stderr = column(table, "stderr");
  const bound = column(table, "bound");
  const low = mean.map((m, i) => m - stderr[i]);
  const high = mean.map((m, i) => m + stderr[i]);

  const width = 860;
  const height = 520;
  const yLabel =
    kind === "handicap_curve" ? "normalized handicap" : "safety ratio";
  const panel = new Panel(
    {
      ...panelBox(width, height),
      xLabel: "step",
      yLabel,
      title: options.title ?? yLabel,
    },
    extentOf(t, 0.02),
    extentOf([...low, ...high, ...bound], 0.08),
  );
  const [tm, mm] = decimate(t, mean);
  const [tl, ll] = decimate(t, low);
  const [, hh] = decimate(t, high);
  panel.band(tl, ll, hh, SERIES_COLORS[0]);
  panel.line(tm, mm, SERIES_COLORS[0], { cssClass: "mean-curve", width: 2 });
  const [tb, bb] = decimate(t, bound);
  panel.line(tb, bb, "#d62728", { dashed: true, cssClass: "bound-line" });
  const body =
    panel.render() +
    "\n" +
    legend(width - 200, MARGIN.top + 8, [
      { label: "replication mean", color: SERIES_COLORS[0] },
      { label: "bound", color: "#d62728", dashed: true },
    ]);
  return svgDocument(width, height, body, captionFrom(meta));
}

export function histogramFigure(
  table: Table,
  meta: Sidecar,
  options: FigureOptions,
): string {
  requireColumns(
    table,
    ["rep", "arm_mu", "testing_time", "bound", "empirical_mean"],
    "testing-time file",
  );
  const values = column(table, "testing_time");
  const bound = column(table, "bound")[0];
  const empiricalMean = column(table, "empirical_mean")[0];
  const bins = options.bins ?? 30;
  const xMax = Math.max(...values, bound, empiricalMean) * 1.05;
  const binWidth = xMax / bins;
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    const b = Math.min(bins - 1, Math.floor(v / binWidth));
    counts[b] += 1;
  }
  const width = 860;
  const height = 520;
  const panel = new Panel(
    {
      ...panelBox(width, height),
      xLabel: "pulls before discard",
      yLabel: "arms",
      title: options.title ?? "Testing time of discarded unsafe arms",
    },
    { min: 0, max: xMax },
    extentOf([0, ...counts], 0.06),
  );
  counts.forEach((count, b) => {
    if (count > 0) panel.rect(b * binWidth, (b + 1) * binWidth, 0, count, "#9ecae1");
  });
  panel.verticalLine(bound, "#d62728", "bound-line");
  panel.verticalLine(empiricalMean, "#2ca02c", "mean-line");
  const body =
    panel.render() +
    "\n" +
    legend(width - 230, MARGIN.top + 8, [
      { label: `expected-time bound ${bound.toFixed(1)}`, color: "#d62728", dashed: true },
      { label: `empirical mean ${empiricalMean.toFixed(1)}`, color: "#2ca02c", dashed: true },
    ]);
  return svgDocument(width, height, body, captionFrom(meta));
}

export function sweepFigure(
  table: Table,
  meta: Sidecar,
  options: FigureOptions,
): string {
  requireColumns(
    table,
    [
      "epsilon",
      "alpha",
      "nhandicap_inf",
      "nhandicap_stderr",
      "rho_inf",
      "rho_stderr",
      "nhandicap_bound",
      "rho_bound",
      "censored_reps",
    ],
    "sweep file",
  );
  const metric = options.metric ?? "nhandicap_inf";
  const eps = column(table, "epsilon");
  const alpha = column(table, "alpha");
  const y = column(table, metric);
  const boundName = metric === "nhandicap_inf" ? "nhandicap_bound" : "rho_bound";
  const bounds = column(table, boundName);

  const groups = new Map<number, number[]>();
  alpha.forEach((a, i) => {
    if (Number.isNaN(a) || Number.isNaN(eps[i])) return; // flawless rows
    if (!groups.has(a)) groups.set(a, []);
    groups.get(a)!.push(i);
  });
  if (groups.size === 0) {
    throw new SchemaError("sweep file has no (epsilon, alpha) rows");
  }
  const width = 860;
  const height = 520;
  const yLabel =
    metric === "nhandicap_inf"
      ? "terminal normalized handicap"
      : "terminal safety ratio";
  const panel = new Panel(
    {
      ...panelBox(width, height),
      xLabel: "epsilon",
      yLabel,
      title: options.title ?? `${yLabel} by design point`,
    },
    extentOf(eps.filter((v) => !Number.isNaN(v)), 0.08),
    extentOf([...y, ...bounds].filter((v) => !Number.isNaN(v)), 0.08),
  );
  const legendEntries = [];
  const sortedAlphas = [...groups.keys()].sort((a, b) => a - b);
  for (const [rank, a] of sortedAlphas.entries()) {
    const idx = groups.get(a)!.sort((i, j) => eps[i] - eps[j]);
    const color = SERIES_COLORS[rank % SERIES_COLORS.length];
    panel.line(idx.map((i) => eps[i]), idx.map((i) => y[i]), color, {
      cssClass: "mean-curve",
      width: 2,
    });
    idx.forEach((i) => panel.dot(eps[i], y[i], color));
    panel.line(idx.map((i) => eps[i]), idx.map((i) => bounds[i]), color, {
      dashed: true,
      cssClass: "bound-line",
    });
    legendEntries.push({ label: `alpha=${a}`, color });
  }
  const body =
    panel.render() + "\n" + legend(width - 160, MARGIN.top + 8, legendEntries);
  return svgDocument(width, height, body, captionFrom(meta));
}
