/**
 * Strict reader for the experiment-harness CSV schema:
 *
 *   i,mean-<K>-<ALG>,std-<K>-<ALG>,...
 *
 * where the std column holds the 95% confidence half-width. Every mean
 * column must come with its matching std column; violations raise
 * SchemaError naming the offending column.
 */

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface CurveTable {
  /** iteration grid (the `i` column) */
  x: number[];
  /** series label ("1-T2VT") -> {mean, std} columns */
  columns: Map<string, { mean: number[]; std: number[] }>;
}

const MEAN_RE = /^mean-(.+)$/;
const STD_RE = /^std-(.+)$/;

export function parseCurveCsv(text: string, source = "<csv>"): CurveTable {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new SchemaError(`${source}: expected a header row and data rows`);
  }
  const header = lines[0].split(",");
  if (header[0] !== "i") {
    throw new SchemaError(`${source}: first column must be "i", got "${header[0]}"`);
  }

  const meanIdx = new Map<string, number>();
  const stdIdx = new Map<string, number>();
  for (let c = 1; c < header.length; c++) {
    const name = header[c];
    const mean = MEAN_RE.exec(name);
    const std = STD_RE.exec(name);
    if (mean) {
      if (meanIdx.has(mean[1])) {
        throw new SchemaError(`${source}: duplicate column "${name}"`);
      }
      meanIdx.set(mean[1], c);
    } else if (std) {
      if (stdIdx.has(std[1])) {
        throw new SchemaError(`${source}: duplicate column "${name}"`);
      }
      stdIdx.set(std[1], c);
    } else {
      throw new SchemaError(`${source}: unrecognized column "${name}"`);
    }
  }
  for (const label of meanIdx.keys()) {
    if (!stdIdx.has(label)) {
      throw new SchemaError(
        `${source}: missing column "std-${label}" for "mean-${label}"`,
      );
    }
  }
  for (const label of stdIdx.keys()) {
    if (!meanIdx.has(label)) {
      throw new SchemaError(
        `${source}: missing column "mean-${label}" for "std-${label}"`,
      );
    }
  }
  if (meanIdx.size === 0) {
    throw new SchemaError(`${source}: no mean-*/std-* series columns`);
  }

  const x: number[] = [];
  const columns = new Map<string, { mean: number[]; std: number[] }>();
  for (const label of meanIdx.keys()) {
    columns.set(label, { mean: [], std: [] });
  }

  const parseCell = (cell: string, row: number, col: string): number => {
    const v = Number(cell);
    if (cell.trim() === "" || Number.isNaN(v)) {
      throw new SchemaError(
        `${source}: row ${row}: bad number "${cell}" in column "${col}"`,
      );
    }
    return v;
  };

  for (let r = 1; r < lines.length; r++) {
    const cells = lines[r].split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${source}: row ${r}: expected ${header.length} cells, got ${cells.length}`,
      );
    }
    x.push(parseCell(cells[0], r, "i"));
    for (const [label, c] of meanIdx) {
      columns.get(label)!.mean.push(parseCell(cells[c], r, `mean-${label}`));
    }
    for (const [label, c] of stdIdx) {
      columns.get(label)!.std.push(parseCell(cells[c], r, `std-${label}`));
    }
  }
  return { x, columns };
}

/** Overlay several tables; grids must agree and labels must not collide. */
export function mergeTables(tables: CurveTable[], sources: string[]): CurveTable {
  const base = tables[0];
  const merged: CurveTable = { x: base.x, columns: new Map(base.columns) };
  for (let t = 1; t < tables.length; t++) {
    const table = tables[t];
    if (
      table.x.length !== base.x.length ||
      table.x.some((v, i) => v !== base.x[i])
    ) {
      throw new SchemaError(
        `${sources[t]}: iteration grid differs from ${sources[0]}`,
      );
    }
    for (const [label, cols] of table.columns) {
      if (merged.columns.has(label)) {
        throw new SchemaError(
          `${sources[t]}: duplicate series "${label}" (also in an earlier file)`,
        );
      }
      merged.columns.set(label, cols);
    }
  }
  return merged;
}
