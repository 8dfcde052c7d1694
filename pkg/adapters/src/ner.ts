/**
 * Token-classification skill extraction: tokenize the description, flag
 * skill tokens with a pluggable labeler, merge contiguous flagged tokens
 * back into surface strings.
 *
 * Span decoding choices (the wire protocol does not dictate them): tokens
 * are maximal runs of non-whitespace, non-punctuation characters, so
 * adjacent commas and periods never leak into skill strings; a token is a
 * skill token when any labeled character range overlaps it; contiguous
 * skill tokens merge into one skill string sliced verbatim from the
 * description.
 */

export interface Token {
  text: string;
  start: number;
  end: number;
}

/** Character ranges the model considers skills; [start, end) offsets. */
export type Labeler = (desc: string) => Array<{ start: number; end: number }>;

export function tokenize(desc: string): Token[] {
  const tokens: Token[] = [];
  const pattern = /[^\s.,;:!?()"]+/gu;
  let match: RegExpExecArray | null;
  while ((match = pattern.exec(desc)) !== null) {
    tokens.push({ text: match[0], start: match.index, end: match.index + match[0].length });
  }
  return tokens;
}

export function decodeSkills(desc: string, ranges: Array<{ start: number; end: number }>): string[] {
  const tokens = tokenize(desc);
  const flagged = tokens.map((token) =>
    ranges.some((range) => range.start < token.end && token.start < range.end)
  );
  const skills: string[] = [];
  let runStart = -1;
  for (let i = 0; i <= tokens.length; i++) {
    const isSkill = i < tokens.length && flagged[i];
    if (isSkill && runStart < 0) {
      runStart = i;
    } else if (!isSkill && runStart >= 0) {
      skills.push(desc.slice(tokens[runStart].start, tokens[i - 1].end));
      runStart = -1;
    }
  }
  // dedupe case-insensitively, keeping the first surface form
  const seen = new Set<string>();
  return skills.filter((skill) => {
    const key = skill.toLowerCase();
    if (seen.has(key)) return false;
    seen.add(key);
    return true;
  });
}

/** Labeler that marks every occurrence of any lexicon phrase (case-insensitive). */
export function lexiconLabeler(phrases: string[]): Labeler {
  const needles = phrases.map((p) => p.trim().toLowerCase()).filter((p) => p.length > 0);
  return (desc: string) => {
    const haystack = desc.toLowerCase();
    const ranges: Array<{ start: number; end: number }> = [];
    for (const needle of needles) {
      let from = 0;
      while (true) {
        const at = haystack.indexOf(needle, from);
        if (at < 0) break;
        ranges.push({ start: at, end: at + needle.length });
        from = at + 1;
      }
    }
    return ranges;
  };
}

export const DEFAULT_LEXICON = [
  "python", "sql", "excel", "accounting", "negotiation", "communication",
  "project management", "data analysis", "1c", "crm",
];
