/** Browser bootstrap: hash routing (#/session/<id>, #/debrief/<id>), action
 * wiring, and error banners.  The session id lives in the URL so a debrief
 * link is shareable with an instructor. */

import { ApiError, Client, freshIdempotencyKey } from "./api";
import { renderDebrief, renderSession } from "./render";
import type { ScenarioInfo } from "./types";
import { debriefViewModel, sessionViewModel } from "./viewmodel";

const client = new Client(
  (window as { VALENCE_BASE_URL?: string }).VALENCE_BASE_URL ?? "",
);
const root = document.getElementById("app") ?? document.body;
const scenarioCache = new Map<string, ScenarioInfo>();

function errorBanner(error: unknown, retry: () => void): void {
  const message =
    error instanceof ApiError
      ? `${error.code}: ${error.message}`
      : String(error);
  root.innerHTML =
    `<div class="banner banner-error" role="alert"></div>` +
    `<button type="button" class="retry">Retry</button>`;
  (root.querySelector(".banner") as HTMLElement).textContent = message;
  root.querySelector(".retry")?.addEventListener("click", retry);
}

async function scenarioInfo(name: string): Promise<ScenarioInfo> {
  const cached = scenarioCache.get(name);
  if (cached !== undefined) {
    return cached;
  }
  for (const info of await client.listScenarios()) {
    scenarioCache.set(info.name, info);
  }
  const info = scenarioCache.get(name);
  if (info === undefined) {
    throw new ApiError(404, "unknown-scenario", `no scenario ${name}`);
  }
  return info;
}

async function showPicker(): Promise<void> {
  const scenarios = await client.listScenarios();
  root.innerHTML =
    `<h1>Training scenarios</h1><ul class="scenarios">` +
    scenarios
      .map(
        (s) =>
          `<li><button type="button" data-scenario="${s.name}">` +
          `${s.name}</button></li>`,
      )
      .join("") +
    `</ul>`;
  for (const button of root.querySelectorAll<HTMLButtonElement>(
    "button[data-scenario]",
  )) {
    button.addEventListener("click", async () => {
      const view = await client.createSession({
        scenario: button.dataset.scenario as string,
      });
      window.location.hash = `#/session/${view.id}`;
    });
  }
}

async function showSession(sessionId: string): Promise<void> {
  const view = await client.getView(sessionId);
  if (view.status === "finished") {
    window.location.hash = `#/debrief/${sessionId}`;
    return;
  }
  const scenario = await scenarioInfo(view.scenario);
  root.innerHTML = renderSession(sessionViewModel(view, scenario));
  for (const button of root.querySelectorAll<HTMLButtonElement>(
    "button.action",
  )) {
    button.addEventListener("click", async () => {
      button.disabled = true;
      // one key per click: a retry of this click replays, a new click steps
      const key = freshIdempotencyKey();
      try {
        const result = await client.applyAction(
          sessionId,
          button.dataset.action as string,
          key,
          view.step_count,
        );
        window.location.hash =
          result.status === "finished"
            ? `#/debrief/${sessionId}`
            : `#/session/${sessionId}`;
        await route();
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          await route(); // someone else advanced the session: refresh
        } else {
          errorBanner(error, () => void route());
        }
      }
    });
  }
}

async function showDebrief(sessionId: string, weights?: string): Promise<void> {
  const view = await client.getView(sessionId);
  if (view.status !== "finished") {
    root.innerHTML =
      `<div class="banner" role="status">session in progress</div>`;
    return;
  }
  const [report, front] = await Promise.all([
    client.getReport(sessionId, weights),
    client.getFront(view.scenario, view.gamma, view.horizon),
  ]);
  root.innerHTML =
    renderDebrief(debriefViewModel(report, front)) +
    `<label>weights <input class="weights" placeholder="1,0"` +
    ` value="${weights ?? ""}"></label>`;
  const input = root.querySelector<HTMLInputElement>("input.weights");
  input?.addEventListener("change", () => {
    void showDebrief(sessionId, input.value || undefined);
  });
}

async function route(): Promise<void> {
  const hash = window.location.hash;
  const session = /^#\/session\/([\w-]+)$/.exec(hash);
  const debrief = /^#\/debrief\/([\w-]+)$/.exec(hash);
  try {
    if (session !== null) {
      await showSession(session[1]);
    } else if (debrief !== null) {
      await showDebrief(debrief[1]);
    } else {
      await showPicker();
    }
  } catch (error) {
    errorBanner(error, () => void route());
  }
}

window.addEventListener("hashchange", () => void route());
void route();
