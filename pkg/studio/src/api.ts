// Typed client for the prediction service. The server owns all query
// semantics; this file only moves JSON and rejects malformed shapes.

export interface ColumnInfo {
  name: string;
  kind: "categorical" | "numeric" | "temporal";
}

export interface TableInfo {
  name: string;
  columns: ColumnInfo[];
  sample_values: string[];
}

export interface SchemaResponse {
  tables: TableInfo[];
}

export interface PredictRequest {
  nl: string;
  table: string;
  chart?: string;
}

export interface PredictResponse {
  vega_zero: string;
  vega_lite: Record<string, unknown>;
  valid: boolean;
  corrected: boolean;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

async function readError(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { error?: string };
    if (typeof body.error === "string") return body.error;
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${res.status}`;
}

export async function getSchema(
  base: string,
  fetchFn: FetchLike = fetch,
): Promise<SchemaResponse> {
  const res = await fetchFn(`${base}/schema`);
  if (!res.ok) throw new ApiError(await readError(res), res.status);
  const body = (await res.json()) as SchemaResponse;
  if (!Array.isArray(body.tables)) {
    throw new ApiError("schema response lacks a tables list", res.status);
  }
  return body;
}

export async function predict(
  base: string,
  request: PredictRequest,
  fetchFn: FetchLike = fetch,
): Promise<PredictResponse> {
  const res = await fetchFn(`${base}/predict`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(request),
  });
  if (!res.ok) throw new ApiError(await readError(res), res.status);
  const body = (await res.json()) as PredictResponse;
  if (typeof body.vega_zero !== "string" || typeof body.vega_lite !== "object") {
    throw new ApiError("predict response is missing vega_zero/vega_lite", res.status);
  }
  return body;
}
