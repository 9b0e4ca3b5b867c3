/** Typed client for the workbook + proxy HTTP API.
 *
 * The UI keeps no document state of its own: every mutation goes through
 * these calls and the authoritative values come back as change sets.
 */

import type {
  CellRecord,
  CellUpdate,
  ChangeEvent,
  TemplateRequest,
  TokenRecord,
  WorkbookDoc,
} from "./types.js";

export type FetchLike = typeof fetch;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(response.status, `${path}: ${body}`);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, { method: "POST", body: JSON.stringify(body) });
  }

  getWorkbook(): Promise<WorkbookDoc> {
    return this.request("/api/workbook");
  }

  getCell(sheet: string, address: string): Promise<CellRecord & { sheet: string }> {
    return this.request(`/api/cells/${encodeURIComponent(sheet)}/${address}`);
  }

  setCell(sheet: string, address: string, input: string): Promise<{ changes: CellUpdate[] }> {
    return this.post("/api/cells", { sheet, address, input });
  }

  getStatus(): Promise<{ pending: number; quiescent: boolean }> {
    return this.request("/api/status");
  }

  buildTemplate(body: TemplateRequest): Promise<{ changes: CellUpdate[] }> {
    return this.post("/api/kit/template", body);
  }

  buildSeedGrid(body: {
    sheet: string;
    prompts: string;
    seeds: number[];
    anchor: string;
  }): Promise<{ changes: CellUpdate[] }> {
    return this.post("/api/kit/seed-grid", body);
  }

  buildCfgSlider(body: {
    sheet: string;
    anchor: string;
    cfgs: number[];
    prompt_text?: string;
    prompt_ref?: string;
    seed?: number;
  }): Promise<{ changes: CellUpdate[] }> {
    return this.post("/api/kit/cfg-slider", body);
  }

  designatePowerCell(body: {
    sheet: string;
    address: string;
    role: "seed" | "cfg";
    value?: number;
    label?: string;
  }): Promise<{ label: string }> {
    return this.post("/api/kit/power-cell", body);
  }

  listPowerCells(): Promise<{ powerCells: WorkbookDoc["powerCells"] }> {
    return this.request("/api/power-cells");
  }

  setPowerCell(label: string, value: number): Promise<{ changes: CellUpdate[] }> {
    return this.post(`/api/power-cells/${encodeURIComponent(label)}`, { value });
  }

  listTokens(): Promise<{ tokens: TokenRecord[] }> {
    return this.request("/api/tokens");
  }

  saveToken(text: string, label?: string): Promise<{ tokens: TokenRecord[] }> {
    return this.post("/api/tokens", { text, label });
  }

  makeDynamic(
    label: string,
    options: { function?: string; input?: string; length?: number } = {},
  ): Promise<{ tokens: TokenRecord[] }> {
    return this.post(`/api/tokens/${encodeURIComponent(label)}/dynamic`, {
      function: options.function ?? "GPT_LIST",
      input: options.input,
      length: options.length ?? 5,
    });
  }

  regenerateToken(label: string): Promise<{ tokens: TokenRecord[] }> {
    return this.post(`/api/tokens/${encodeURIComponent(label)}/regenerate`, {});
  }

  deleteToken(label: string): Promise<{ tokens: TokenRecord[] }> {
    return this.request(`/api/tokens/${encodeURIComponent(label)}`, {
      method: "DELETE",
    });
  }

  saveWorkbook(path?: string): Promise<{ path: string }> {
    return this.post("/api/workbook/save", path ? { path } : {});
  }

  takeSnapshot(label?: string): Promise<{ sequence: number }> {
    return this.post("/api/snapshots", { label });
  }

  /** Poll until the engine reports no pending cells. */
  async waitQuiescent(timeoutMs = 15000, intervalMs = 50): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.getStatus();
      if (status.quiescent) return;
      if (Date.now() > deadline) {
        throw new Error(`still ${status.pending} pending after ${timeoutMs}ms`);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}

export type { ChangeEvent };
