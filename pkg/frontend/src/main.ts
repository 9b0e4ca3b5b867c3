/** Browser bootstrap: wires the DOM to the API client and event stream. */

import { ApiClient } from "./api.js";
import { renderPendingBanner, renderResults } from "./render.js";
import { renderPowerPanel } from "./powerPanel.js";
import { renderTokenBank, insertTokenIntoTemplate } from "./tokenBank.js";
import { SheetState, ViewState } from "./state.js";
import { subscribeChanges } from "./sse.js";
import type { TokenRecord, WorkbookDoc } from "./types.js";

const api = new ApiClient("");
const state = new SheetState();
const view = new ViewState();
let tokens: TokenRecord[] = [];
let doc: WorkbookDoc | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function redraw(): void {
  el("results").innerHTML = renderResults(state, view);
  el("banner").innerHTML = renderPendingBanner(state);
  el("tokens").innerHTML = renderTokenBank(tokens);
  el("power").innerHTML = renderPowerPanel(
    doc?.powerCells ?? [],
    state.pendingCells().length,
  );
  el<HTMLButtonElement>("toggle").textContent =
    view.mode === "grid" ? "switch to list view" : "switch to grid view";
}

async function refreshDocument(): Promise<void> {
  doc = await api.getWorkbook();
  state.loadWorkbook(doc);
  tokens = doc.tokens;
  redraw();
}

async function start(): Promise<void> {
  await refreshDocument();
  subscribeChanges("", (event) => {
    state.applyChanges(event);
    redraw();
  });

  el("toggle").addEventListener("click", () => {
    view.toggleMode();
    redraw();
  });

  el<HTMLInputElement>("display-size").addEventListener("input", (event) => {
    view.setDisplaySize(Number((event.target as HTMLInputElement).value));
    redraw();
  });

  el("results").addEventListener("click", (event) => {
    const tile = (event.target as HTMLElement).closest("[data-address]");
    view.select(tile ? tile.getAttribute("data-address") : null);
    redraw();
  });

  el<HTMLFormElement>("editor").addEventListener("submit", async (event) => {
    event.preventDefault();
    const address = el<HTMLInputElement>("edit-address").value.trim();
    const input = el<HTMLInputElement>("edit-input").value;
    if (!address) return;
    state.setInput(address, input); // optimistic; change sets reconcile
    await api.setCell(state.sheet, address, input);
  });

  el("power").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.action !== "commit") return;
    const row = target.closest<HTMLElement>(".power-cell");
    if (!row) return;
    const label = row.dataset.label ?? "";
    const input = row.querySelector("input");
    if (input) await api.setPowerCell(label, Number(input.value));
  });

  el("tokens").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    const chip = target.closest<HTMLElement>(".token");
    if (!action || !chip) return;
    const label = chip.dataset.label ?? "";
    if (action === "delete") {
      tokens = (await api.deleteToken(label)).tokens;
    } else if (action === "regenerate") {
      tokens = (await api.regenerateToken(label)).tokens;
    } else if (action === "make-dynamic") {
      const length = Number(prompt("how many variations?", "5") ?? "5");
      tokens = (await api.makeDynamic(label, { length })).tokens;
    } else if (action === "insert") {
      const token = tokens.find((t) => t.label === label);
      const anchor = prompt("expand at cell", "A1");
      const base = prompt("base prompt", "portrait of a woman");
      if (token && anchor && base) {
        await insertTokenIntoTemplate(api, token, {
          sheet: state.sheet,
          anchor,
          basePrompt: base,
        });
        await refreshDocument();
      }
    }
    redraw();
  });

  el("save-token").addEventListener("click", async () => {
    const text = el<HTMLInputElement>("token-text").value.trim();
    if (!text) return;
    tokens = (await api.saveToken(text)).tokens;
    redraw();
  });
}

start().catch((error) => {
  el("banner").innerHTML = `<div class="banner error">${String(error)}</div>`;
});
