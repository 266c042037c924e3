/**
 * Word tokenizer, deliberately re-specified rather than shared with the
 * Python core. The rule must stay in lockstep:
 *
 *  - whitespace separates tokens and is never part of one;
 *  - a maximal run of Unicode punctuation is one token, except that a lone
 *    apostrophe directly followed by a final "s" keeps the "s" (clitic
 *    possessive: goldsmith|'s);
 *  - anything else is a maximal run of non-space non-punctuation;
 *  - surfaces are lowercased, offsets index the original string.
 *
 * Conformance against the core is pinned by the shared fixture file
 * (tests/fixtures/data/tokenization.tsv).
 */

export interface Token {
  surface: string;
  start: number;
  end: number;
}

const PUNCT = /\p{P}/u;
const ALNUM = /[\p{L}\p{N}]/u;
const APOSTROPHES = new Set(["'", "’"]);

function isPunct(ch: string): boolean {
  return PUNCT.test(ch);
}

function isSpace(ch: string): boolean {
  return /\s/u.test(ch);
}

export function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  let i = 0;
  const n = text.length;
  while (i < n) {
    const ch = text[i]!;
    if (isSpace(ch)) {
      i += 1;
      continue;
    }
    const start = i;
    if (isPunct(ch)) {
      while (i < n && isPunct(text[i]!)) {
        i += 1;
      }
      if (
        i - start === 1 &&
        APOSTROPHES.has(text[start]!) &&
        i < n &&
        (text[i] === "s" || text[i] === "S") &&
        (i + 1 >= n || !ALNUM.test(text[i + 1]!))
      ) {
        i += 1;
      }
    } else {
      while (i < n && !isSpace(text[i]!) && !isPunct(text[i]!)) {
        i += 1;
      }
    }
    tokens.push({
      surface: text.slice(start, i).toLowerCase(),
      start,
      end: i,
    });
  }
  return tokens;
}
