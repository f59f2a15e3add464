// One analyst session: an append-only history of submissions and a guard
// that keeps a single request in flight at a time.

import { predict, PredictRequest, PredictResponse } from "./api.js";

export interface HistoryEntry {
  request: PredictRequest;
  response: PredictResponse;
}

export type SubmitFn = (request: PredictRequest) => Promise<PredictResponse>;

export class QuerySession {
  private entries: HistoryEntry[] = [];
  private inFlight = false;
  private readonly submitFn: SubmitFn;

  constructor(base: string, submitFn?: SubmitFn) {
    this.submitFn = submitFn ?? ((request) => predict(base, request));
  }

  get pending(): boolean {
    return this.inFlight;
  }

  get history(): readonly HistoryEntry[] {
    return this.entries;
  }

  async submit(nl: string, table: string, chart?: string): Promise<HistoryEntry> {
    if (this.inFlight) {
      throw new Error("a request is already in flight");
    }
    const request: PredictRequest = chart ? { nl, table, chart } : { nl, table };
    this.inFlight = true;
    try {
      const response = await this.submitFn(request);
      const entry: HistoryEntry = { request, response };
      this.entries.push(entry);
      return entry;
    } finally {
      this.inFlight = false;
    }
  }

  /** Re-submits a prior request unchanged and appends the fresh answer. */
  async replay(index: number): Promise<HistoryEntry> {
    const prior = this.entries[index];
    if (!prior) {
      throw new Error(`no history entry at index ${index}`);
    }
    const { nl, table, chart } = prior.request;
    return this.submit(nl, table, chart);
  }
}
