/** HTML-string renderers for the two screens.  Data values appear only as
 * text (or <title> text inside the SVG); pixel coordinates and bar widths
 * are presentational attributes derived for layout only. */

import type {
  DebriefViewModel,
  ScatterModel,
  SessionViewModel,
} from "./viewmodel";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function num(value: number): string {
  return String(value);
}

export function renderSession(vm: SessionViewModel): string {
  const gauges = vm.gauges
    .map(
      (g) =>
        `<div class="gauge" role="group" aria-label="${escapeHtml(g.name)}"` +
        ` data-level-index="${g.levelIndex}"` +
        ` data-domain-size="${g.domainSize}">` +
        `<span class="gauge-name">${escapeHtml(g.name)}</span>` +
        `<span class="gauge-level">${escapeHtml(g.level)}</span></div>`,
    )
    .join("");
  const buttons = vm.actions
    .map(
      (a) =>
        `<button type="button" class="action" data-action="${escapeHtml(
          a.name,
        )}"${a.enabled ? "" : " disabled"}>${escapeHtml(a.name)}</button>`,
    )
    .join("");
  const log = vm.stepLog
    .map((entry) => {
      const scores =
        entry.alignment === undefined
          ? ""
          : " — " +
            Object.entries(entry.alignment)
              .map(([value, score]) => `${escapeHtml(value)} ${num(score)}`)
              .join(", ");
      return `<li>${escapeHtml(entry.action)}${scores}</li>`;
    })
    .join("");
  return (
    `<section class="session" data-session-id="${escapeHtml(vm.id)}">` +
    `<div class="banner" role="status" aria-live="polite">` +
    `${escapeHtml(vm.banner)}</div>` +
    `<div class="gauges">${gauges}</div>` +
    `<div class="actions" role="group" aria-label="actions">${buttons}</div>` +
    `<ol class="step-log">${log}</ol>` +
    `</section>`
  );
}

function renderScatter(scatter: ScatterModel): string {
  const width = 400;
  const height = 300;
  const pad = 30;
  const points = [...scatter.front, scatter.trainee];
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) =>
    pad + ((x - xMin) / (xMax - xMin || 1)) * (width - 2 * pad);
  const sy = (y: number) =>
    height - pad - ((y - yMin) / (yMax - yMin || 1)) * (height - 2 * pad);
  const polyline = scatter.front
    .map((p) => `${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`)
    .join(" ");
  const circles = scatter.front
    .map(
      (p) =>
        `<circle class="front-point" cx="${sx(p.x).toFixed(1)}"` +
        ` cy="${sy(p.y).toFixed(1)}" r="5">` +
        `<title>${escapeHtml(scatter.xLabel)} ${num(p.x)}, ` +
        `${escapeHtml(scatter.yLabel)} ${num(p.y)}</title></circle>`,
    )
    .join("");
  const trainee =
    `<circle class="trainee${scatter.onFront ? " on-front" : ""}"` +
    ` cx="${sx(scatter.trainee.x).toFixed(1)}"` +
    ` cy="${sy(scatter.trainee.y).toFixed(1)}" r="6">` +
    `<title>you: ${escapeHtml(scatter.xLabel)} ${num(scatter.trainee.x)}, ` +
    `${escapeHtml(scatter.yLabel)} ${num(scatter.trainee.y)}</title>` +
    `</circle>`;
  return (
    `<svg class="pareto" viewBox="0 0 ${width} ${height}" role="img"` +
    ` aria-label="Pareto front">` +
    `<polyline class="front-line" fill="none" points="${polyline}"/>` +
    circles +
    trainee +
    `</svg>`
  );
}

export function renderDebrief(vm: DebriefViewModel): string {
  const maxAbs = Math.max(...vm.bars.map((b) => Math.abs(b.score)), 1e-9);
  const bars = vm.bars
    .map(
      (b) =>
        `<div class="bar" role="group" aria-label="${escapeHtml(b.value)}">` +
        `<span class="bar-label">${escapeHtml(b.value)}</span>` +
        `<span class="bar-value">${num(b.score)}</span>` +
        `<div class="bar-fill${b.score < 0 ? " negative" : ""}"` +
        ` style="width:${((Math.abs(b.score) / maxAbs) * 100).toFixed(
          1,
        )}%"></div></div>`,
    )
    .join("");
  const header = vm.values
    .map((value) => `<th>${escapeHtml(value)}</th>`)
    .join("");
  const rows = vm.stepTable
    .map(
      (row) =>
        `<tr><td>${row.index}</td>` +
        `<td>${escapeHtml(row.action)}</td>` +
        vm.values
          .map((value) => `<td>${num(row.scores[value])}</td>`)
          .join("") +
        `</tr>`,
    )
    .join("");
  const table =
    `<table class="step-table"><thead><tr><th>step</th><th>action</th>` +
    `${header}</tr></thead><tbody>${rows}</tbody></table>`;
  const regrets = vm.regrets
    .map(
      (r) =>
        `<li>front (${r.frontVector.map(num).join(", ")}) — ` +
        `regret (${r.regret.map(num).join(", ")})</li>`,
    )
    .join("");
  const replays = vm.replays
    .map(
      (replay) =>
        `<li class="replay"><span class="replay-label">` +
        `${escapeHtml(replay.label)}</span> ` +
        `(${replay.target.map(num).join(", ")}): ` +
        `<ol class="replay-steps">${replay.actions
          .map((a) => `<li>${escapeHtml(a)}</li>`)
          .join("")}</ol></li>`,
    )
    .join("");
  const remarks = vm.remarks
    .map((remark) => `<li>${escapeHtml(remark)}</li>`)
    .join("");
  return (
    `<section class="debrief">` +
    `<div class="banner banner-${escapeHtml(vm.outcome)}" role="status">` +
    `Outcome: ${escapeHtml(vm.outcome)} (${escapeHtml(vm.dominance)})` +
    `</div>` +
    `<div class="bars">${bars}</div>` +
    table +
    (vm.scatter === null ? "" : renderScatter(vm.scatter)) +
    (regrets === "" ? "" : `<ul class="regrets">${regrets}</ul>`) +
    `<ul class="replays">${replays}</ul>` +
    (remarks === "" ? "" : `<ul class="remarks">${remarks}</ul>`) +
    `</section>`
  );
}
