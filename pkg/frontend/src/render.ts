/** Pure HTML renderers: ViewState in, markup out. Event wiring lives in main.ts. */

import {
  CandidateRow,
  ViewState,
  actionsFor,
  compileEnabled,
  distinctTargets,
  featureBreakdown,
} from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const ACTION_LABELS: Record<string, string> = {
  approve: "Approve",
  reject: "Reject",
  remap: "Remap",
};

function renderActions(row: CandidateRow): string {
  const actions = actionsFor(row.status);
  const parts: string[] = [];
  for (const action of actions) {
    if (action === "remap") continue;
    const label = row.status === "APPROVED" && action === "reject"
      ? "Withdraw"
      : ACTION_LABELS[action] ?? action;
    parts.push(
      `<button data-action="${action}" data-pair="${escapeHtml(row.pairId)}">${label}</button>`,
    );
  }
  if (actions.includes("remap")) {
    parts.push(
      `<span class="remap"><input list="target-concepts" placeholder="target concept"` +
        ` data-remap-input="${escapeHtml(row.pairId)}">` +
        `<button data-action="remap" data-pair="${escapeHtml(row.pairId)}">Remap</button></span>`,
    );
  }
  return parts.join(" ");
}

function renderSnippets(row: CandidateRow): string {
  if (row.snippets.length === 0) return "";
  const items = row.snippets
    .map(
      (s) =>
        `<li><code>sample ${s.sampleIndex}</code> at <code>${escapeHtml(s.sourcePath)}</code>` +
        `<pre>${escapeHtml(JSON.stringify(s.snippet, null, 2))}</pre></li>`,
    )
    .join("");
  return (
    `<details class="snippets"><summary>${row.snippets.length} annotated sample(s)</summary>` +
    `<ul>${items}</ul></details>`
  );
}

function renderFeatures(row: CandidateRow): string {
  const breakdown = featureBreakdown(row);
  if (breakdown.length === 0) return "";
  const cells = breakdown
    .map((f) => `<span class="feature">${escapeHtml(f.name)} ${f.value.toFixed(2)}</span>`)
    .join(" ");
  return `<div class="features">${cells}</div>`;
}

export function renderRow(row: CandidateRow): string {
  const cls = `status-${row.status.toLowerCase()}${row.recommended ? " recommended" : ""}`;
  return (
    `<tr class="${cls}" data-row="${escapeHtml(row.pairId)}">` +
    `<td>${row.recommended ? "★" : ""}</td>` +
    `<td>${escapeHtml(row.source)}</td>` +
    `<td>${escapeHtml(row.target)}</td>` +
    `<td class="score">${row.score.toFixed(3)}</td>` +
    `<td class="status">${row.status}${row.decidedBy ? ` <small>(${escapeHtml(row.decidedBy)})</small>` : ""}</td>` +
    `<td>${renderFeatures(row)}${renderSnippets(row)}</td>` +
    `<td class="actions">${renderActions(row)}</td>` +
    `</tr>`
  );
}

function renderCompile(state: ViewState): string {
  const enabled = compileEnabled(state);
  const button = `<button id="compile" data-action="compile"${enabled ? "" : " disabled"}>Compile translation config</button>`;
  const hint = enabled
    ? ""
    : `<span class="hint">approve at least one pair to compile</span>`;
  let download = "";
  if (state.config !== null) {
    const doc = JSON.stringify(state.config, null, 2);
    download =
      ` <a id="config-download" download="translation_config.json"` +
      ` href="data:application/json;charset=utf-8,${encodeURIComponent(doc)}">` +
      `Download translation_config.json</a>`;
  }
  return `<section class="compile">${button}${hint}${download}</section>`;
}

export function renderApp(state: ViewState): string {
  const error = state.error
    ? `<div class="error-banner" role="alert">${escapeHtml(state.error)}</div>`
    : "";
  if (!state.loaded) {
    return (
      `<header><h1>Match review</h1>` +
      `<p class="session">session ${escapeHtml(state.sessionId)}</p></header>` +
      `${error}<p class="empty">No session data.</p>`
    );
  }
  const targets = distinctTargets(state.rows)
    .map((t) => `<option value="${escapeHtml(t)}"></option>`)
    .join("");
  const approved = state.approvedPairs
    .map((p) => `<li>${escapeHtml(p.source)} &rarr; ${escapeHtml(p.target)}</li>`)
    .join("");
  return (
    `<header><h1>Match review</h1>` +
    `<p class="session">session ${escapeHtml(state.sessionId)}</p>` +
    `<p class="progress">${state.progress.decided}/${state.progress.total} decided</p>` +
    `</header>` +
    error +
    `<datalist id="target-concepts">${targets}</datalist>` +
    `<table class="candidates"><thead><tr>` +
    `<th></th><th>source</th><th>target</th><th>score</th><th>status</th><th>evidence</th><th></th>` +
    `</tr></thead><tbody>` +
    state.rows.map(renderRow).join("") +
    `</tbody></table>` +
    (approved ? `<section class="approved"><h2>Approved</h2><ul>${approved}</ul></section>` : "") +
    renderCompile(state)
  );
}
