/** Wire types for the workbook and proxy API. */

export type CellValue =
  | { kind: "blank" }
  | { kind: "text"; text: string }
  | { kind: "number"; value: number }
  | { kind: "image"; id: string; url: string; width: number; height: number }
  | { kind: "pending"; requestId: number }
  | { kind: "error"; code: string; message: string };

export interface CellRecord {
  address: string;
  input: string;
  value: CellValue;
}

export interface CellUpdate {
  sheet: string;
  address: string;
  value: CellValue;
}

export interface ChangeEvent {
  changes: CellUpdate[];
  pending: number;
}

export interface WorkbookDoc {
  sheets: Record<string, CellRecord[]>;
  settings: { default_seed: number; default_cfg: number; providers: string };
  powerCells: PowerCellRecord[];
  tokens: TokenRecord[];
  pending: number;
}

export interface PowerCellRecord {
  label: string;
  sheet: string;
  address: string;
  role: "seed" | "cfg";
  value: CellValue;
}

export type AxisSourceJson =
  | { kind: "manual"; items: string[] }
  | { kind: "generative"; function: string; input: string; length: number }
  | { kind: "range"; sheet: string; a1: string };

export interface TokenRecord {
  label: string;
  kind: "static" | "dynamic";
  text?: string;
  generator?: AxisSourceJson;
  items?: string[];
}

export interface TemplateRequest {
  sheet: string;
  anchor: string;
  slots: Record<string, AxisSourceJson>;
  layout: Record<string, "column" | "row" | number>;
  segments?: { text?: string; slot?: string }[];
  seeds?: number[];
  seed?: number;
  cfg?: number;
}
