import { SchemaError } from "./errors.js";

export interface Table {
  /** Column name to column index. */
  columns: Map<string, number>;
  /** Row-major numeric cells; blank cells become NaN. */
  rows: number[][];
}

/**
 * Parse one of the simulator's CSV files. The producing side guarantees a
 * header row, comma separators, '.' decimals and no quoting, so a plain
 * split is exact.
 */
export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("input file is empty");
  }
  const header = lines[0].split(",");
  const columns = new Map<string, number>();
  header.forEach((name, i) => columns.set(name.trim(), i));
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `row ${i + 1} has ${cells.length} cells, header has ${header.length}`,
      );
    }
    rows.push(cells.map((cell) => (cell === "" ? NaN : Number(cell))));
  }
  return { columns, rows };
}

/**
 * Check that every required column is present and that the file holds data.
 * Unknown extra columns are tolerated with a warning, per the file contract.
 */
export function requireColumns(
  table: Table,
  required: readonly string[],
  label: string,
): void {
  const missing = required.filter((name) => !table.columns.has(name));
  if (missing.length > 0) {
    throw new SchemaError(
      `${label}: missing column(s) ${missing.join(", ")}; ` +
        `found ${[...table.columns.keys()].join(", ")}`,
    );
  }
  const extra = [...table.columns.keys()].filter(
    (name) => !required.includes(name),
  );
  if (extra.length > 0) {
    console.warn(`${label}: ignoring unknown column(s) ${extra.join(", ")}`);
  }
  if (table.rows.length === 0) {
    throw new SchemaError(`${label}: no data rows`);
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.get(name);
  if (idx === undefined) {
    throw new SchemaError(`column ${name} not present`);
  }
  return table.rows.map((row) => row[idx]);
}
