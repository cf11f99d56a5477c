/** Strict reader for the benchmark CSVs (plain comma-separated, no quoting). */

import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: string[][];
}

export class MissingColumnError extends Error {
  constructor(public readonly column: string, public readonly file: string) {
    super(`column '${column}' missing from ${file}`);
  }
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    return { columns: [], rows: [] };
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  for (const row of rows) {
    if (row.length !== columns.length) {
      throw new Error(`row has ${row.length} cells, header has ${columns.length}`);
    }
  }
  return { columns, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf-8"));
}

/** Column accessor that fails loudly with the column name. */
export function column(table: Table, name: string, file = "<csv>"): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnError(name, file);
  }
  return table.rows.map((r) => r[idx]);
}

export function numericColumn(table: Table, name: string, file = "<csv>"): number[] {
  return column(table, name, file).map((v) => {
    const x = Number(v);
    if (!Number.isFinite(x)) {
      throw new Error(`non-numeric value '${v}' in column '${name}' of ${file}`);
    }
    return x;
  });
}

/** Columns matching a numbered prefix, e.g. truth_1..truth_d in order. */
export function numberedColumns(table: Table, prefix: string, file = "<csv>"): number[][] {
  const names = table.columns.filter((c) => c.startsWith(prefix));
  names.sort((a, b) => Number(a.slice(prefix.length)) - Number(b.slice(prefix.length)));
  if (names.length === 0) {
    throw new MissingColumnError(`${prefix}1`, file);
  }
  return names.map((n) => numericColumn(table, n, file));
}
