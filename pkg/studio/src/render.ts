// Chart rendering. The server's compiled Vega-Lite document is authoritative;
// the only thing added client-side is the demo rows bound to its named data
// source. The input document is never modified.

import * as vega from "vega";
import { compile } from "vega-lite";
import type { TopLevelSpec } from "vega-lite";

export type VegaLiteDoc = Record<string, unknown>;

export function markOf(doc: VegaLiteDoc): string {
  const mark = doc.mark;
  if (typeof mark === "string") return mark;
  if (mark && typeof mark === "object" && "type" in mark) {
    return String((mark as { type: unknown }).type);
  }
  return "unknown";
}

/** A copy of the document with rows bound to its named data source. */
export function bindRows(
  doc: VegaLiteDoc,
  rows: Record<string, unknown>[],
): VegaLiteDoc {
  const data = doc.data as { name?: string; values?: unknown } | undefined;
  if (data && data.name !== undefined && data.values === undefined) {
    return { ...doc, data: { values: rows } };
  }
  return doc;
}

export async function renderSvg(
  doc: VegaLiteDoc,
  rows: Record<string, unknown>[],
): Promise<string> {
  const bound = bindRows(doc, rows);
  const compiled = compile(bound as unknown as TopLevelSpec).spec;
  const view = new vega.View(vega.parse(compiled), { renderer: "none" });
  try {
    return await view.toSVG();
  } finally {
    view.finalize();
  }
}
