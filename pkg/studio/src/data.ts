// Demo rows for a table. The service compiles charts against a named data
// source; the studio fills that source with small deterministic rows shaped
// by the table's schema, so the same table always draws the same demo chart.

import { TableInfo } from "./api.js";

function hash(text: string): number {
  let h = 2166136261;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  return h >>> 0;
}

export function makeDemoRows(table: TableInfo, count = 12): Record<string, unknown>[] {
  const categories = table.sample_values.length
    ? table.sample_values
    : ["alpha", "beta", "gamma", "delta"];
  const rows: Record<string, unknown>[] = [];
  for (let i = 0; i < count; i++) {
    const row: Record<string, unknown> = {};
    for (const column of table.columns) {
      const seed = hash(`${table.name}.${column.name}.${i}`);
      if (column.kind === "numeric") {
        row[column.name] = (seed % 900) / 10 + 10;
      } else if (column.kind === "temporal") {
        const date = new Date(Date.UTC(2024, 0, 1 + i * 7));
        row[column.name] = date.toISOString().slice(0, 10);
      } else {
        row[column.name] = categories[seed % categories.length];
      }
    }
    rows.push(row);
  }
  return rows;
}
