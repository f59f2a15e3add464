// DOM wiring for the query loop. All semantics live server-side; this file
// moves strings between the form, the service, and the page.

import { ApiError, getSchema, TableInfo } from "./api.js";
import { makeDemoRows } from "./data.js";
import { HistoryEntry, QuerySession } from "./session.js";
import { markOf, renderSvg, VegaLiteDoc } from "./render.js";

const SERVICE_BASE = (window as { NL2VEGA_BASE?: string }).NL2VEGA_BASE
  ?? "http://127.0.0.1:8080";

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

const session = new QuerySession(SERVICE_BASE);
let tables: TableInfo[] = [];

function tableByName(name: string): TableInfo | undefined {
  return tables.find((t) => t.name.toLowerCase() === name.toLowerCase());
}

function showError(message: string): void {
  const box = el<HTMLElement>("error");
  box.textContent = message;
  box.hidden = message === "";
}

function describeColumns(table: TableInfo): string {
  return table.columns.map((c) => `${c.name} (${c.kind})`).join(", ");
}

async function showEntry(entry: HistoryEntry): Promise<void> {
  // the displayed query text is the server's string, byte for byte
  el<HTMLElement>("vega-zero").textContent = entry.response.vega_zero;
  el<HTMLElement>("badge-valid").textContent =
    entry.response.valid ? "valid" : "not schema-valid";
  el<HTMLElement>("badge-corrected").hidden = !entry.response.corrected;

  const table = tableByName(entry.request.table);
  const doc = entry.response.vega_lite as VegaLiteDoc;
  const rows = table ? makeDemoRows(table) : [];
  el<HTMLElement>("chart").innerHTML = await renderSvg(doc, rows);
  el<HTMLElement>("chart-caption").textContent =
    `${markOf(doc)} chart over ${rows.length} demo rows`;
}

function renderHistory(): void {
  const list = el<HTMLUListElement>("history");
  list.replaceChildren();
  session.history.forEach((entry, index) => {
    const item = document.createElement("li");
    const replay = document.createElement("button");
    const pin = entry.request.chart ? ` [${entry.request.chart}]` : "";
    replay.textContent = `${entry.request.table}${pin}: ${entry.request.nl}`;
    replay.addEventListener("click", () => void submitEntry(() => session.replay(index)));
    item.appendChild(replay);
    list.appendChild(item);
  });
}

async function submitEntry(run: () => Promise<HistoryEntry>): Promise<void> {
  const button = el<HTMLButtonElement>("submit");
  button.disabled = true;
  showError("");
  try {
    const entry = await run();
    await showEntry(entry);
    renderHistory();
  } catch (err) {
    showError(err instanceof ApiError ? err.message : String(err));
  } finally {
    button.disabled = false;
  }
}

function onSubmit(event: Event): void {
  event.preventDefault();
  const nl = el<HTMLInputElement>("nl").value.trim();
  const table = el<HTMLSelectElement>("table").value;
  const chart = el<HTMLSelectElement>("chart-pin").value || undefined;
  if (!nl || !table) {
    showError("type a question and pick a table first");
    return;
  }
  void submitEntry(() => session.submit(nl, table, chart));
}

async function start(): Promise<void> {
  try {
    tables = (await getSchema(SERVICE_BASE)).tables;
  } catch (err) {
    showError(`cannot reach the service at ${SERVICE_BASE}: ${String(err)}`);
    return;
  }
  const picker = el<HTMLSelectElement>("table");
  picker.replaceChildren();
  for (const table of tables) {
    const option = document.createElement("option");
    option.value = table.name;
    option.textContent = table.name;
    picker.appendChild(option);
  }
  picker.addEventListener("change", () => {
    const table = tableByName(picker.value);
    el<HTMLElement>("columns").textContent = table ? describeColumns(table) : "";
  });
  picker.dispatchEvent(new Event("change"));
  el<HTMLFormElement>("query-form").addEventListener("submit", onSubmit);
}

void start();
