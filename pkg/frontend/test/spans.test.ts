import { describe, expect, it } from "vitest";

import {
  addSpan,
  removeSpanAt,
  snapToWords,
  Span,
  spanAt,
  validateSpans,
} from "../src/spans.js";

const TEXT = "the city council approved the budget";
// tokens: the[0,3) city[4,8) council[9,16) approved[17,25) the[26,29) budget[30,36)

describe("snapToWords", () => {
  it("widens a mid-word drag to whole words", () => {
    expect(snapToWords(TEXT, 6, 11)).toEqual({ start: 4, end: 16 });
  });

  it("handles a reversed drag", () => {
    expect(snapToWords(TEXT, 11, 6)).toEqual({ start: 4, end: 16 });
  });

  it("treats a zero-width drag as a click on the character under it", () => {
    expect(snapToWords(TEXT, 5, 5)).toEqual({ start: 4, end: 8 });
  });

  it("returns null when the drag covers no word", () => {
    expect(snapToWords(TEXT, 3, 4)).toBeNull(); // the single space
    expect(snapToWords(TEXT, 200, 210)).toBeNull();
    expect(snapToWords("", 0, 0)).toBeNull();
  });

  it("a drag across a gap includes both neighbouring words", () => {
    expect(snapToWords(TEXT, 2, 5)).toEqual({ start: 0, end: 8 });
  });
});

describe("addSpan", () => {
  it("adds a snapped labeled span and keeps the list sorted", () => {
    const first = addSpan([], TEXT, 30, 33, "intrinsic");
    expect(first).toEqual({
      ok: true,
      spans: [{ label: "intrinsic", start: 30, end: 36 }],
    });
    const spans = (first as { ok: true; spans: Span[] }).spans;
    const second = addSpan(spans, TEXT, 0, 2, "extrinsic");
    expect(second.ok).toBe(true);
    expect((second as { ok: true; spans: Span[] }).spans.map((s) => s.start)).toEqual([
      0, 30,
    ]);
  });

  it("rejects any overlap with an existing span", () => {
    const base: Span[] = [{ label: "intrinsic", start: 4, end: 16 }];
    expect(addSpan(base, TEXT, 9, 20, "extrinsic")).toEqual({
      ok: false,
      reason: "overlap",
    });
    // even when only the snap widens into the overlap
    expect(addSpan(base, TEXT, 15, 15, "extrinsic")).toEqual({
      ok: false,
      reason: "overlap",
    });
  });

  it("rejects a drag that touches no word", () => {
    expect(addSpan([], TEXT, 16, 17, "intrinsic")).toEqual({
      ok: false,
      reason: "empty",
    });
  });

  it("adjacent spans are allowed", () => {
    const base: Span[] = [{ label: "intrinsic", start: 4, end: 16 }];
    const res = addSpan(base, TEXT, 17, 18, "extrinsic");
    expect(res.ok).toBe(true);
  });
});

describe("removeSpanAt / spanAt", () => {
  const spans: Span[] = [
    { label: "intrinsic", start: 4, end: 16 },
    { label: "extrinsic", start: 30, end: 36 },
  ];

  it("finds the span containing a position", () => {
    expect(spanAt(spans, 4)?.label).toBe("intrinsic");
    expect(spanAt(spans, 15)?.label).toBe("intrinsic");
    expect(spanAt(spans, 16)).toBeUndefined(); // end is exclusive
    expect(spanAt(spans, 35)?.label).toBe("extrinsic");
  });

  it("removes only the span under the click", () => {
    expect(removeSpanAt(spans, 10)).toEqual([spans[1]]);
    expect(removeSpanAt(spans, 3)).toEqual(spans);
  });
});

describe("validateSpans", () => {
  it("accepts word-aligned disjoint sorted spans", () => {
    expect(
      validateSpans(TEXT, [
        { label: "intrinsic", start: 0, end: 3 },
        { label: "extrinsic", start: 4, end: 16 },
      ])
    ).toBeNull();
    expect(validateSpans(TEXT, [])).toBeNull();
  });

  it("flags misaligned, vacuous and overlapping spans", () => {
    expect(validateSpans(TEXT, [{ label: "x", start: 1, end: 3 }])).toMatch(
      /not word-aligned/
    );
    expect(validateSpans(TEXT, [{ label: "x", start: 3, end: 3 }])).toMatch(/vacuous/);
    expect(
      validateSpans(TEXT, [
        { label: "x", start: 0, end: 8 },
        { label: "x", start: 4, end: 16 },
      ])
    ).toMatch(/overlaps/);
  });
});
