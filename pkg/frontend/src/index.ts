export { parseCurveCsv, mergeTables, SchemaError } from "./csv.js";
export type { CurveTable } from "./csv.js";
export { buildPlotData, renderSvg } from "./plot.js";
export type { PlotData, Series } from "./plot.js";
export { main, parseArgs, run } from "./cli.js";
