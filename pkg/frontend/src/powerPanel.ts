/** Global hyperparameter panel: one numeric input per power cell. */

import type { PowerCellRecord } from "./types.js";
import { escapeHtml } from "./render.js";

export function renderPowerPanel(cells: PowerCellRecord[], pending: number): string {
  if (cells.length === 0) {
    return `<div class="power-panel empty">no power cells registered</div>`;
  }
  const rows = cells.map((cell) => {
    const value = cell.value.kind === "number" ? cell.value.value : "";
    return (
      `<label class="power-cell" data-label="${escapeHtml(cell.label)}">` +
      `<span>${escapeHtml(cell.label)} (${cell.role} @ ${cell.address})</span>` +
      `<input type="number" value="${value}" data-role="${cell.role}">` +
      `<button data-action="commit">regenerate</button></label>`
    );
  });
  const progress =
    pending > 0 ? `<div class="progress">${pending} cells regenerating…</div>` : "";
  return `<div class="power-panel">${rows.join("")}${progress}</div>`;
}
