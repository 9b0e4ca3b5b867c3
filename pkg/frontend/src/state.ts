/** Client-side mirror of sheet values plus view preferences.
 *
 * The mirror is write-through only: it is seeded from GET /api/workbook
 * and updated exclusively by authoritative change sets, so after
 * quiescence it equals what the server reports cell by cell. View mode,
 * selection, and display size are the only client-owned state.
 */

import type { CellUpdate, CellValue, ChangeEvent, WorkbookDoc } from "./types.js";

export type ViewMode = "grid" | "list";

export interface CellSnapshot {
  address: string;
  input: string;
  value: CellValue;
}

export class SheetState {
  readonly cells = new Map<string, CellSnapshot>();
  sheet: string;
  pendingFromServer = 0;

  constructor(sheet = "Sheet1") {
    this.sheet = sheet;
  }

  loadWorkbook(doc: WorkbookDoc): void {
    this.cells.clear();
    const records = doc.sheets[this.sheet] ?? [];
    for (const record of records) {
      this.cells.set(record.address, { ...record });
    }
    this.pendingFromServer = doc.pending;
  }

  applyChanges(event: ChangeEvent): void {
    for (const change of event.changes) {
      if (change.sheet !== this.sheet) continue;
      this.applyUpdate(change);
    }
    this.pendingFromServer = event.pending;
  }

  applyUpdate(change: CellUpdate): void {
    const existing = this.cells.get(change.address);
    if (change.value.kind === "blank" && (!existing || existing.input === "")) {
      this.cells.delete(change.address);
      return;
    }
    this.cells.set(change.address, {
      address: change.address,
      input: existing?.input ?? "",
      value: change.value,
    });
  }

  setInput(address: string, input: string): void {
    const existing = this.cells.get(address);
    this.cells.set(address, {
      address,
      input,
      value: existing?.value ?? { kind: "blank" },
    });
  }

  value(address: string): CellValue {
    return this.cells.get(address)?.value ?? { kind: "blank" };
  }

  images(): CellSnapshot[] {
    return [...this.cells.values()]
      .filter((cell) => cell.value.kind === "image")
      .sort(byAddress);
  }

  pendingCells(): CellSnapshot[] {
    return [...this.cells.values()]
      .filter((cell) => cell.value.kind === "pending")
      .sort(byAddress);
  }

  /** The prompt text feeding an image cell: the nearest text value the
   * image formula references, falling back to the formula source. */
  promptFor(image: CellSnapshot): string {
    const refs = image.input.match(/\$?[A-Z]{1,3}\$?[0-9]+/g) ?? [];
    for (const raw of refs) {
      const address = raw.replaceAll("$", "");
      const value = this.value(address);
      if (value.kind === "text") return value.text;
    }
    return image.input;
  }
}

export class ViewState {
  mode: ViewMode = "grid";
  selected: string | null = null;
  displaySize = 160;

  toggleMode(): ViewMode {
    this.mode = this.mode === "grid" ? "list" : "grid";
    return this.mode;
  }

  select(address: string | null): void {
    this.selected = address;
  }

  setDisplaySize(px: number): void {
    this.displaySize = Math.min(512, Math.max(48, Math.round(px)));
  }
}

function byAddress(a: CellSnapshot, b: CellSnapshot): number {
  const parse = (addr: string): [number, string] => {
    const match = /^([A-Z]+)([0-9]+)$/.exec(addr);
    return match ? [Number(match[2] ?? 0), match[1] ?? addr] : [0, addr];
  };
  const [rowA, colA] = parse(a.address);
  const [rowB, colB] = parse(b.address);
  if (rowA !== rowB) return rowA - rowB;
  return colA.length !== colB.length ? colA.length - colB.length : colA < colB ? -1 : 1;
}
