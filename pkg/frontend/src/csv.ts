/**
 * Parser for the simulator's CSV dialect: comma separators, '.' decimals,
 * one header row, LF line endings. Values are float64 written in Python's
 * repr form, so "nan"/"inf"/"-inf" are legal cell values.
 */

import * as fs from "node:fs";

export interface Table {
  columns: string[];
  rows: number[][];
}

const parseCell = (cell: string, line: number): number => {
  const trimmed = cell.trim();
  if (trimmed === "nan") return Number.NaN;
  if (trimmed === "inf") return Number.POSITIVE_INFINITY;
  if (trimmed === "-inf") return Number.NEGATIVE_INFINITY;
  const value = Number(trimmed);
  if (trimmed === "" || Number.isNaN(value)) {
    throw new Error(`line ${line}: cannot parse number ${JSON.stringify(cell)}`);
  }
  return value;
};

export function parseCsv(text: string): Table {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0) throw new Error("empty CSV: no header row");
  const columns = lines[0].split(",").map((c) => c.trim());
  if (columns.some((c) => c === "")) throw new Error("empty column name in header");
  const rows = lines.slice(1).map((line, k) => {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new Error(
        `line ${k + 2}: expected ${columns.length} cells, found ${cells.length}`,
      );
    }
    return cells.map((cell) => parseCell(cell, k + 2));
  });
  return { columns, rows };
}

export function readCsv(path: string): Table {
  if (!fs.existsSync(path)) throw new Error(`input file not found: ${path}`);
  try {
    return parseCsv(fs.readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`${path}: ${(err as Error).message}`);
  }
}

export function column(table: Table, name: string): number[] {
  const k = table.columns.indexOf(name);
  if (k < 0) {
    throw new Error(
      `missing column ${JSON.stringify(name)}; have ${table.columns.join(", ")}`,
    );
  }
  return table.rows.map((row) => row[k]);
}

export function columnsMatching(table: Table, prefix: string): string[] {
  return table.columns.filter((c) => c.startsWith(prefix));
}
