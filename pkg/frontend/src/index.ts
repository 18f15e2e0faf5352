export { parseCsv, requireColumns, column } from "./csv.js";
export { SchemaError, IoError } from "./errors.js";
export {
  traceFigure,
  curveFigure,
  histogramFigure,
  sweepFigure,
} from "./figures.js";
export type { FigureKind, FigureOptions, Sidecar } from "./figures.js";
export { render } from "./render.js";
export type { PlotJob } from "./render.js";
