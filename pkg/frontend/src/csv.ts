import { readFileSync } from "fs";
import { parse } from "papaparse";
import schemaFile from "./csv_schema.json";

export type Row = Record<string, string | number | null>;

export interface ParsedCsv {
  schema: string;
  columns: string[];
  rows: Row[];
}

export class SchemaError extends Error {}

const SCHEMAS: Record<string, { columns: string[] }> = (schemaFile as any).schemas;

/** Match a header against the shipped schema file; reject unknown layouts. */
export function matchSchema(columns: string[]): string {
  for (const [name, spec] of Object.entries(SCHEMAS)) {
    if (spec.columns.length === columns.length && spec.columns.every((c, i) => c === columns[i])) {
      return name;
    }
  }
  throw new SchemaError(
    `CSV header [${columns.join(", ")}] matches no shipped schema ` +
      `(known: ${Object.keys(SCHEMAS).join(", ")})`
  );
}

export function readCsv(path: string): ParsedCsv {
  const text = readFileSync(path, "utf8");
  const parsed = parse<Row>(text.trim(), { header: true, dynamicTyping: true, skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${path}: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  const schema = matchSchema(columns);
  if (parsed.data.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return { schema, columns, rows: parsed.data };
}

export function requireColumns(csv: ParsedCsv, needed: string[], path: string): void {
  for (const c of needed) {
    if (!csv.columns.includes(c)) {
      throw new SchemaError(`${path}: column '${c}' missing from schema '${csv.schema}'`);
    }
  }
}

export function numericColumn(csv: ParsedCsv, name: string): number[] {
  const out: number[] = [];
  for (const row of csv.rows) {
    const v = row[name];
    if (typeof v === "number" && isFinite(v)) {
      out.push(v);
    }
  }
  return out;
}
