import type { ApiErrorShape, ChunkHit, ReferenceMeta, ScoreResponse, SessionTurn } from "./types.js";

// Pure HTML-string renderers (no DOM access) so contract tests can assert on
// output in Node. main.ts injects the strings into the page.

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function fmt(value: number | null, digits = 3): string {
  return value === null ? "–" : value.toFixed(digits);
}

export function renderError(error: ApiErrorShape): string {
  const label = error.code === "provider_unavailable"
    ? "providers unavailable"
    : escapeHtml(error.code);
  return `<div class="banner error" data-code="${escapeHtml(error.code)}">` +
    `${label}: ${escapeHtml(error.message)}</div>`;
}

export function renderChunks(chunks: ChunkHit[]): string {
  const rows = chunks.map((c) =>
    `<li class="chunk">` +
    `<span class="score">${c.score.toFixed(4)}</span>` +
    `<span class="source">${escapeHtml(c.article_id)}</span>` +
    `<span class="words">${c.word_count}w</span>` +
    `<p>${escapeHtml(c.text)}</p></li>`).join("");
  return `<details class="context"><summary>retrieved context ` +
    `(${chunks.length} chunks)</summary><ol>${rows}</ol></details>`;
}

export function renderReferences(references: ReferenceMeta[]): string {
  if (references.length === 0) return "";
  const rows = references.map((r) => {
    const authors = r.authors.length > 0 ? r.authors.join(", ") : r.article_id;
    const date = r.published ? ` (${escapeHtml(r.published)})` : "";
    return `<li>• ${escapeHtml(authors)}${date}. ${escapeHtml(r.title)}.</li>`;
  }).join("");
  return `<div class="references"><h4>REFERENCES</h4><ul>${rows}</ul></div>`;
}

export function renderScores(turn: SessionTurn, index: number): string {
  if (turn.scoring) {
    return `<span class="badge pending">scoring…</span>`;
  }
  if (turn.scoresError) {
    return `<span class="badge unscored" title="${escapeHtml(turn.scoresError.message)}">unscored</span>`;
  }
  if (turn.scores) {
    const s: ScoreResponse = turn.scores;
    return (
      `<span class="badge">CR ${fmt(s.context_relevance)}</span>` +
      `<span class="badge">F ${fmt(s.faithfulness)}</span>` +
      `<span class="badge">AR ${fmt(s.answer_relevance)}</span>` +
      `<span class="badge">${s.context_word_count} words</span>`
    );
  }
  return `<button class="score-btn" data-turn="${index}">score</button>`;
}

export function renderConfigTag(turn: SessionTurn): string {
  const entries = Object.entries(turn.config);
  if (entries.length === 0) return `<span class="config-tag">defaults</span>`;
  const text = entries.map(([k, v]) => `${k}=${v}`).join(" ");
  return `<span class="config-tag">${escapeHtml(text)}</span>`;
}

export function renderTurn(turn: SessionTurn, index: number): string {
  const parts = [
    `<article class="turn" data-index="${index}">`,
    `<div class="question"><span class="who">you</span>` +
    `${renderConfigTag(turn)}<p>${escapeHtml(turn.question)}</p></div>`,
  ];
  if (turn.error) {
    parts.push(renderError(turn.error));
  } else if (turn.response) {
    parts.push(
      `<div class="answer"><span class="who">litrag</span>` +
      `<p>${escapeHtml(turn.response.answer)}</p>` +
      `<div class="scores">${renderScores(turn, index)}</div>` +
      renderChunks(turn.response.chunks) +
      renderReferences(turn.response.references) +
      `</div>`);
  }
  parts.push(`</article>`);
  return parts.join("");
}

export function renderTurns(turns: readonly SessionTurn[]): string {
  return turns.map((t, i) => renderTurn(t, i)).join("");
}
