/** HTML renderers for the two result layouts.
 *
 * Both views draw from the same SheetState; toggling only switches the
 * renderer, so selection and scroll anchoring survive. Thumbnails use
 * native lazy loading and are sized client-side by the display slider,
 * so rescaling never refetches blobs.
 */

import type { SheetState, ViewState, CellSnapshot } from "./state.js";
import type { CellValue } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function thumbnail(cell: CellSnapshot, size: number, selected: boolean): string {
  const value = cell.value;
  if (value.kind !== "image") return "";
  const cls = selected ? "tile selected" : "tile";
  return (
    `<figure class="${cls}" data-address="${cell.address}">` +
    `<img loading="lazy" src="${value.url}" width="${size}" height="${size}" ` +
    `alt="${cell.address}">` +
    `<figcaption>${cell.address}</figcaption></figure>`
  );
}

function pendingTile(cell: CellSnapshot, size: number): string {
  const title = cell.input ? ` title="${escapeHtml(cell.input)}"` : "";
  return (
    `<figure class="tile pending" data-address="${cell.address}"${title} ` +
    `style="width:${size}px;height:${size}px">` +
    `<span class="spinner"></span><figcaption>${cell.address}</figcaption></figure>`
  );
}

function errorBadge(value: CellValue): string {
  if (value.kind !== "error") return "";
  return `<span class="error" title="${escapeHtml(value.message)}">${value.code}</span>`;
}

export function renderGridView(state: SheetState, view: ViewState): string {
  const tiles: string[] = [];
  for (const cell of state.images()) {
    tiles.push(thumbnail(cell, view.displaySize, view.selected === cell.address));
  }
  for (const cell of state.pendingCells()) {
    tiles.push(pendingTile(cell, view.displaySize));
  }
  return `<div class="grid-view" data-mode="grid">${tiles.join("")}</div>`;
}

export function renderListView(state: SheetState, view: ViewState): string {
  const rows: string[] = [];
  for (const cell of state.images()) {
    const selected = view.selected === cell.address ? " selected" : "";
    rows.push(
      `<li class="row${selected}" data-address="${cell.address}">` +
        thumbnail(cell, Math.min(view.displaySize, 192), view.selected === cell.address) +
        `<div class="prompt">${escapeHtml(state.promptFor(cell))}</div></li>`,
    );
  }
  for (const cell of state.pendingCells()) {
    rows.push(
      `<li class="row pending" data-address="${cell.address}">` +
        pendingTile(cell, 96) +
        `<div class="prompt">${escapeHtml(cell.input)}</div></li>`,
    );
  }
  return `<ul class="list-view" data-mode="list">${rows.join("")}</ul>`;
}

export function renderResults(state: SheetState, view: ViewState): string {
  return view.mode === "grid"
    ? renderGridView(state, view)
    : renderListView(state, view);
}

export function renderPendingBanner(state: SheetState): string {
  const count = state.pendingCells().length;
  if (count === 0) return `<div class="banner idle">all results ready</div>`;
  return `<div class="banner busy">${count} generating…</div>`;
}

export function countThumbnails(html: string): number {
  return (html.match(/<img /g) ?? []).length;
}

export function countPendingMarkers(html: string): number {
  return (html.match(/class="spinner"/g) ?? []).length;
}
