// Offset-based highlighting. Ranges arrive from the service as Unicode
// code-point offsets and are applied verbatim — the client never
// re-tokenizes or searches the text itself.

export interface Segment {
  text: string;
  highlighted: boolean;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Split text into plain/highlighted segments along [start, end) ranges. */
export function segmentByRanges(text: string, ranges: [number, number][]): Segment[] {
  // Offsets count code points, not UTF-16 units.
  const chars = Array.from(text);
  const merged = mergeRanges(ranges, chars.length);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const [start, end] of merged) {
    if (start > cursor) {
      segments.push({ text: chars.slice(cursor, start).join(""), highlighted: false });
    }
    segments.push({ text: chars.slice(start, end).join(""), highlighted: true });
    cursor = end;
  }
  if (cursor < chars.length) {
    segments.push({ text: chars.slice(cursor).join(""), highlighted: false });
  }
  return segments;
}

/** Clamp, sort, and coalesce overlapping ranges so segments never overlap. */
function mergeRanges(ranges: [number, number][], length: number): [number, number][] {
  const clamped = ranges
    .map(([a, b]): [number, number] => [Math.max(0, a), Math.min(length, b)])
    .filter(([a, b]) => a < b)
    .sort((x, y) => x[0] - y[0] || x[1] - y[1]);
  const merged: [number, number][] = [];
  for (const range of clamped) {
    const last = merged[merged.length - 1];
    if (last && range[0] <= last[1]) {
      last[1] = Math.max(last[1], range[1]);
    } else {
      merged.push([range[0], range[1]]);
    }
  }
  return merged;
}

/** Render text as HTML with <mark> around each highlighted range. */
export function renderHighlighted(text: string, ranges: [number, number][]): string {
  return segmentByRanges(text, ranges)
    .map((segment) =>
      segment.highlighted
        ? `<mark class="evidence">${escapeHtml(segment.text)}</mark>`
        : escapeHtml(segment.text),
    )
    .join("");
}
