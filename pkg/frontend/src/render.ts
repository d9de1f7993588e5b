// Pure view functions: QueryResponse in, HTML string out. All state lives
// in the caller; rendering the same response twice gives identical markup.

import { escapeHtml, renderHighlighted } from "./highlight.js";
import type { QueryResponse, QueryResult, Snippet, SummaryBundle } from "./types.js";

function renderSnippetCard(snippet: Snippet): string {
  const source = snippet.source_uri
    ? `<a class="source" href="${escapeHtml(snippet.source_uri)}">source</a>`
    : "";
  return [
    `<article class="snippet-card" data-para-id="${escapeHtml(snippet.para_id)}">`,
    `<header>`,
    `<span class="rank">#${snippet.rank}</span>`,
    `<h3>${escapeHtml(snippet.title)}</h3>`,
    `<span class="score" title="match ${snippet.match_score.toFixed(4)}, ` +
      `confidence ${snippet.confidence.toFixed(4)}">` +
      `${snippet.rerank_score.toFixed(4)}</span>`,
    `</header>`,
    `<p class="paragraph">${renderHighlighted(snippet.text, snippet.highlights)}</p>`,
    `<footer>${escapeHtml(snippet.doc_id)} · ${escapeHtml(snippet.para_id)} ${source}</footer>`,
    `</article>`,
  ].join("");
}

function renderSummary(summary: SummaryBundle | null): string {
  if (!summary) return "";
  const parts: string[] = [`<section class="summary-panel">`];
  if (summary.extractive.length > 0) {
    const shortBadge = summary.extractive_short
      ? ` <span class="badge">fewer than 3 candidates</span>`
      : "";
    parts.push(`<h3>Extractive summary${shortBadge}</h3><ol class="extractive">`);
    for (const sentence of summary.extractive) {
      parts.push(
        `<li><span class="badge source-badge">${escapeHtml(sentence.para_id)}` +
          `#s${sentence.sentence_index}</span> ` +
          `<span class="similarity">${sentence.similarity.toFixed(3)}</span> ` +
          `${escapeHtml(sentence.text)}</li>`,
      );
    }
    parts.push(`</ol>`);
  }
  if (summary.abstractive) {
    parts.push(`<h3>Abstractive summary</h3>`);
    parts.push(`<p class="abstractive">`);
    for (const segment of summary.abstractive.segments) {
      parts.push(
        `<span class="segment" data-para-id="${escapeHtml(segment.para_id)}" ` +
          `title="${escapeHtml(segment.para_id)}">${escapeHtml(segment.text)}</span> `,
      );
    }
    parts.push(`</p>`);
  }
  parts.push(`</section>`);
  return parts.join("");
}

function renderNotes(notes: string[]): string {
  if (notes.length === 0) return "";
  const badges = notes
    .map((note) => `<span class="badge warning">${escapeHtml(note)}</span>`)
    .join(" ");
  return `<div class="notes">${badges}</div>`;
}

function renderResult(result: QueryResult): string {
  const snippets = result.snippets ?? [];
  const cards =
    snippets.length > 0
      ? snippets.map(renderSnippetCard).join("")
      : `<p class="empty-state">No matches for this query.</p>`;
  return [
    `<section class="result-group">`,
    `<h2>${escapeHtml(result.query)}</h2>`,
    renderNotes(result.notes),
    renderSummary(result.summary),
    `<div class="snippets">${cards}</div>`,
    `</section>`,
  ].join("");
}

export function renderResults(response: QueryResponse): string {
  return response.results.map(renderResult).join("");
}

export function renderError(message: string): string {
  return (
    `<div class="error-banner" role="alert">${escapeHtml(message)} ` +
    `<button type="button" data-action="retry">Retry</button></div>`
  );
}

export function renderLoading(): string {
  return `<p class="loading">Searching…</p>`;
}
