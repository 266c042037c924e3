/**
 * Span selection model: drags snap to whole words, overlaps are rejected,
 * clicking inside an existing span removes it. Offsets are character
 * positions into the summary text, matching what the service validates.
 */

import { Token, tokenize } from "./tokenize.js";

export interface Span {
  label: string;
  start: number;
  end: number;
}

export type AddResult =
  | { ok: true; spans: Span[] }
  | { ok: false; reason: "overlap" | "empty" };

/** Tokens overlapping the raw drag range by at least one character. */
function coveredTokens(tokens: Token[], a: number, b: number): Token[] {
  const lo = Math.min(a, b);
  const hi = Math.max(a, b);
  if (lo === hi) {
    // a click, not a drag: treat as covering the character under the caret
    return tokens.filter((t) => t.start <= lo && lo < t.end);
  }
  return tokens.filter((t) => t.start < hi && lo < t.end);
}

/** Snap a raw drag range to whole-word boundaries; null when it touches no word. */
export function snapToWords(
  text: string,
  dragStart: number,
  dragEnd: number
): { start: number; end: number } | null {
  const covered = coveredTokens(tokenize(text), dragStart, dragEnd);
  if (covered.length === 0) {
    return null;
  }
  return { start: covered[0]!.start, end: covered[covered.length - 1]!.end };
}

function overlaps(a: Span, b: { start: number; end: number }): boolean {
  return a.start < b.end && b.start < a.end;
}

/** Add a snapped drag as a labeled span, rejecting overlap with existing ones. */
export function addSpan(
  spans: Span[],
  text: string,
  dragStart: number,
  dragEnd: number,
  label: string
): AddResult {
  const snapped = snapToWords(text, dragStart, dragEnd);
  if (snapped === null) {
    return { ok: false, reason: "empty" };
  }
  if (spans.some((s) => overlaps(s, snapped))) {
    return { ok: false, reason: "overlap" };
  }
  const next = [...spans, { label, ...snapped }];
  next.sort((x, y) => x.start - y.start);
  return { ok: true, spans: next };
}

/** Remove the span containing the clicked character, if any. */
export function removeSpanAt(spans: Span[], pos: number): Span[] {
  return spans.filter((s) => !(s.start <= pos && pos < s.end));
}

export function spanAt(spans: Span[], pos: number): Span | undefined {
  return spans.find((s) => s.start <= pos && pos < s.end);
}

/** Word-aligned, in-bounds, sorted, pairwise disjoint: the service's rules. */
export function validateSpans(text: string, spans: Span[]): string | null {
  const tokens = tokenize(text);
  const starts = new Set(tokens.map((t) => t.start));
  const ends = new Set(tokens.map((t) => t.end));
  let prevEnd = -1;
  for (const span of spans) {
    if (span.end <= span.start) {
      return `vacuous span at ${span.start}`;
    }
    if (!starts.has(span.start) || !ends.has(span.end)) {
      return `span [${span.start},${span.end}) is not word-aligned`;
    }
    if (span.start < prevEnd) {
      return `span at ${span.start} overlaps the previous one`;
    }
    prevEnd = span.end;
  }
  return null;
}
