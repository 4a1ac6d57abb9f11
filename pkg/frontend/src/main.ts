/** Browser entry point: pick a session, render, and wire row actions. */

import { ReviewApi } from "./api.js";
import { ReviewController } from "./controller.js";
import { renderApp } from "./render.js";

async function pickSessionId(api: ReviewApi): Promise<string | null> {
  const fromQuery = new URLSearchParams(window.location.search).get("session");
  if (fromQuery) return fromQuery;
  const sessions = await api.listSessions();
  return sessions[0]?.sessionId ?? null;
}

function draw(root: HTMLElement, controller: ReviewController): void {
  root.innerHTML = renderApp(controller.state);
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const api = new ReviewApi();

  let sessionId: string | null = null;
  try {
    sessionId = await pickSessionId(api);
  } catch (err) {
    root.innerHTML = `<div class="error-banner" role="alert">${String(err)}</div>`;
    return;
  }
  if (!sessionId) {
    root.innerHTML = `<p class="empty">No review sessions on this server.</p>`;
    return;
  }

  const controller = new ReviewController(api, sessionId);
  await controller.load();
  draw(root, controller);

  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("button[data-action]");
    if (!(button instanceof HTMLButtonElement) || button.disabled) return;
    const action = button.dataset.action ?? "";
    void (async () => {
      if (action === "compile") {
        await controller.compile();
      } else {
        const pairId = button.dataset.pair ?? "";
        let target: string | undefined;
        if (action === "remap") {
          const input = root.querySelector<HTMLInputElement>(
            `input[data-remap-input="${CSS.escape(pairId)}"]`,
          );
          target = input?.value.trim() || undefined;
          if (!target) return;
        }
        await controller.decide(pairId, action, target);
      }
      draw(root, controller);
    })();
  });
}

void boot();
