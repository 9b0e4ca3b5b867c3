/** Token bank rendering and the insert-into-template action. */

import type { ApiClient } from "./api.js";
import type { CellUpdate, TokenRecord } from "./types.js";
import { escapeHtml } from "./render.js";

export function renderTokenBank(tokens: TokenRecord[]): string {
  const chips = tokens.map((token) => {
    if (token.kind === "static") {
      return (
        `<li class="token static" data-label="${escapeHtml(token.label)}">` +
        `${escapeHtml(token.label)}` +
        `<button data-action="make-dynamic">make dynamic</button>` +
        `<button data-action="insert">add to prompt</button>` +
        `<button data-action="delete">delete</button></li>`
      );
    }
    const items = (token.items ?? []).map((i) => `<em>${escapeHtml(i)}</em>`).join(", ");
    return (
      `<li class="token dynamic" data-label="${escapeHtml(token.label)}">` +
      `${escapeHtml(token.label)} <span class="items">${items}</span>` +
      `<button data-action="regenerate">regenerate</button>` +
      `<button data-action="insert">add to prompt</button>` +
      `<button data-action="delete">delete</button></li>`
    );
  });
  return `<ul class="token-bank">${chips.join("")}</ul>`;
}

/** Drop a token into a prompt template at the anchor.
 *
 * A dynamic token's current items become a row axis, so each item gets
 * its own prompt column (with images below when a seed is given); a
 * static token contributes its single text.
 */
export async function insertTokenIntoTemplate(
  api: ApiClient,
  token: TokenRecord,
  options: { sheet: string; anchor: string; basePrompt: string; seed?: number },
): Promise<{ changes: CellUpdate[] }> {
  const slotSource =
    token.kind === "dynamic"
      ? { kind: "manual" as const, items: token.items ?? [] }
      : { kind: "manual" as const, items: [token.text ?? token.label] };
  return api.buildTemplate({
    sheet: options.sheet,
    anchor: options.anchor,
    slots: { [token.label]: slotSource },
    layout: { [token.label]: token.kind === "dynamic" ? "row" : 0 },
    segments: [{ text: options.basePrompt }, { slot: token.label }],
    seed: options.seed,
  });
}
