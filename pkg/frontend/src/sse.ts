/** Minimal server-sent-events reader over fetch streaming.
 *
 * Works identically in the browser and under node, which lets the test
 * suite consume the live event stream from the real server.
 */

import type { ChangeEvent } from "./types.js";
import type { FetchLike } from "./api.js";

export interface Subscription {
  close: () => void;
  done: Promise<void>;
}

export function subscribeChanges(
  baseUrl: string,
  onEvent: (event: ChangeEvent) => void,
  fetchImpl: FetchLike = fetch,
): Subscription {
  const controller = new AbortController();
  const done = (async () => {
    const response = await fetchImpl(`${baseUrl}/api/events`, {
      signal: controller.signal,
      headers: { accept: "text/event-stream" },
    });
    if (!response.ok || response.body === null) {
      throw new Error(`event stream failed: ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    try {
      for (;;) {
        const { value, done: finished } = await reader.read();
        if (finished) return;
        buffer += decoder.decode(value, { stream: true });
        let boundary = buffer.indexOf("\n\n");
        while (boundary !== -1) {
          const frame = buffer.slice(0, boundary);
          buffer = buffer.slice(boundary + 2);
          boundary = buffer.indexOf("\n\n");
          const data = frame
            .split("\n")
            .filter((line) => line.startsWith("data:"))
            .map((line) => line.slice(5).trim())
            .join("\n");
          if (data) {
            onEvent(JSON.parse(data) as ChangeEvent);
          }
        }
      }
    } finally {
      reader.releaseLock();
    }
  })().catch((error: unknown) => {
    if (!controller.signal.aborted) throw error;
  });
  return { close: () => controller.abort(), done };
}
