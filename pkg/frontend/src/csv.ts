import * as fs from "node:fs";
import * as path from "node:path";
import Papa from "papaparse";

export interface Table {
  /** source path, used for labels and error messages */
  path: string;
  /** basename without extension, used as a series label */
  label: string;
  columns: string[];
  rows: Record<string, number | string | boolean | null>[];
}

export function readCsv(filePath: string): Table {
  const text = fs.readFileSync(filePath, "utf8");
  const parsed = Papa.parse<Record<string, number | string>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`${filePath}: CSV parse error: ${e.message} (row ${e.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  return {
    path: filePath,
    label: path.basename(filePath).replace(/\.csv$/i, ""),
    columns,
    rows: parsed.data,
  };
}

export function requireColumns(table: Table, needed: string[], kind: string): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new Error(
        `${kind}: missing column '${column}' in ${table.path} ` +
        `(found: ${table.columns.join(", ") || "none"})`,
      );
    }
  }
}

export function numeric(row: Record<string, unknown>, column: string): number {
  const v = row[column];
  if (typeof v === "number") return v;
  const parsed = Number(v);
  return Number.isFinite(parsed) ? parsed : NaN;
}
