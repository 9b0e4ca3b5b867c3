import { describe, expect, it } from "vitest";

import { SheetState, ViewState } from "../src/state.js";
import {
  countPendingMarkers,
  countThumbnails,
  renderGridView,
  renderListView,
  renderResults,
} from "../src/render.js";
import type { ChangeEvent, WorkbookDoc } from "../src/types.js";

function imageValue(id: string) {
  return {
    kind: "image" as const,
    id,
    url: `/image/${id}`,
    width: 512,
    height: 512,
  };
}

function docWith(cells: WorkbookDoc["sheets"]["Sheet1"]): WorkbookDoc {
  return {
    sheets: { Sheet1: cells },
    settings: { default_seed: 0, default_cfg: 7, providers: "mock" },
    powerCells: [],
    tokens: [],
    pending: 0,
  };
}

describe("SheetState", () => {
  it("mirrors workbook cells and applies change sets", () => {
    const state = new SheetState();
    state.loadWorkbook(
      docWith([{ address: "A1", input: "hello", value: { kind: "text", text: "hello" } }]),
    );
    expect(state.value("A1")).toEqual({ kind: "text", text: "hello" });

    const event: ChangeEvent = {
      changes: [
        { sheet: "Sheet1", address: "A1", value: { kind: "text", text: "edited" } },
        { sheet: "Other", address: "A1", value: { kind: "text", text: "ignored" } },
      ],
      pending: 2,
    };
    state.applyChanges(event);
    expect(state.value("A1")).toEqual({ kind: "text", text: "edited" });
    expect(state.pendingFromServer).toBe(2);
  });

  it("tracks pending cells until they resolve", () => {
    const state = new SheetState();
    state.applyChanges({
      changes: [
        { sheet: "Sheet1", address: "B1", value: { kind: "pending", requestId: 1 } },
      ],
      pending: 1,
    });
    expect(state.pendingCells().map((c) => c.address)).toEqual(["B1"]);
    state.applyChanges({
      changes: [{ sheet: "Sheet1", address: "B1", value: imageValue("aa") }],
      pending: 0,
    });
    expect(state.pendingCells()).toHaveLength(0);
    expect(state.images().map((c) => c.address)).toEqual(["B1"]);
  });

  it("finds the prompt text an image formula references", () => {
    const state = new SheetState();
    state.loadWorkbook(
      docWith([
        { address: "C2", input: "prompt text", value: { kind: "text", text: "a cat, oil" } },
        { address: "D2", input: "=TTI($C2, D$1)", value: imageValue("bb") },
      ]),
    );
    const image = state.images()[0]!;
    expect(state.promptFor(image)).toBe("a cat, oil");
  });
});

describe("view rendering", () => {
  function populated(): SheetState {
    const state = new SheetState();
    state.loadWorkbook(
      docWith([
        { address: "D2", input: "=TTI(A1, 1)", value: imageValue("d2") },
        { address: "E2", input: "=TTI(A1, 2)", value: imageValue("e2") },
        { address: "F9", input: "=TTI(A1, 3)", value: { kind: "pending", requestId: 9 } },
      ]),
    );
    return state;
  }

  it("grid view renders one thumbnail per image and spinners for pending", () => {
    const html = renderGridView(populated(), new ViewState());
    expect(countThumbnails(html)).toBe(2);
    expect(countPendingMarkers(html)).toBe(1);
    expect(html).toContain('loading="lazy"');
  });

  it("list view pairs each image with its prompt text", () => {
    const state = populated();
    state.loadWorkbook(
      docWith([
        { address: "C2", input: "p", value: { kind: "text", text: "full prompt here" } },
        { address: "D2", input: "=TTI($C2, 1)", value: imageValue("d2") },
      ]),
    );
    const html = renderListView(state, new ViewState());
    expect(html).toContain("full prompt here");
    expect(countThumbnails(html)).toBe(1);
  });

  it("toggling views preserves selection", () => {
    const state = populated();
    const view = new ViewState();
    view.select("E2");
    const grid = renderResults(state, view);
    expect(grid).toContain('data-mode="grid"');
    expect(grid).toContain('class="tile selected" data-address="E2"');
    view.toggleMode();
    const list = renderResults(state, view);
    expect(list).toContain('data-mode="list"');
    expect(list).toContain('class="row selected"');
    view.toggleMode();
    const gridAgain = renderResults(state, view);
    expect(view.selected).toBe("E2");
    expect(gridAgain).toContain('class="tile selected" data-address="E2"');
  });

  it("display size rescales without changing image urls", () => {
    const state = populated();
    const view = new ViewState();
    const before = renderGridView(state, view);
    view.setDisplaySize(320);
    const after = renderGridView(state, view);
    expect(before.match(/src="[^"]+"/g)).toEqual(after.match(/src="[^"]+"/g));
    expect(after).toContain('width="320"');
  });
});
