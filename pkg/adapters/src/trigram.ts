/**
 * Deterministic character-trigram embedder, bit-compatible with the
 * harness's built-in mock provider: lowercased text, width-3 code-point
 * windows (shorter texts contribute themselves whole), FNV-1a with a fixed
 * seed into 256 buckets, counts L2-normalized with index-order arithmetic.
 *
 * Case handling uses toLowerCase(); for inputs where full Unicode case
 * folding differs from lowercasing (e.g. "ß"), vectors may diverge from the
 * harness mock. ASCII and Cyrillic inputs match exactly.
 */

export const DIM = 256;

const FNV_OFFSET = 0x811c9dc5; // 2166136261
const FNV_PRIME = 16777619;
const SEED = 0x5bd1e995;

const encoder = new TextEncoder();

function fnv1a(data: Uint8Array): number {
  let h = (FNV_OFFSET ^ SEED) >>> 0;
  for (const byte of data) {
    h = (h ^ byte) >>> 0;
    h = Math.imul(h, FNV_PRIME) >>> 0;
  }
  return h;
}

export function bucket(gram: string): number {
  const h = fnv1a(encoder.encode(gram));
  return (h ^ (h >>> 16) ^ (h >>> 8)) & 0xff;
}

export function trigramEmbed(text: string): number[] {
  if (!text) {
    throw new Error("cannot embed an empty string");
  }
  const folded = Array.from(text.toLowerCase());
  const grams: string[] = [];
  if (folded.length < 3) {
    grams.push(folded.join(""));
  } else {
    for (let i = 0; i + 3 <= folded.length; i++) {
      grams.push(folded.slice(i, i + 3).join(""));
    }
  }
  const counts = new Array<number>(DIM).fill(0);
  for (const gram of grams) {
    counts[bucket(gram)] += 1;
  }
  let sumSquares = 0;
  for (let i = 0; i < DIM; i++) {
    sumSquares += counts[i] * counts[i];
  }
  const norm = Math.sqrt(sumSquares);
  return counts.map((c) => c / norm);
}

export function cosine(a: number[], b: number[]): number {
  if (a.length !== b.length) {
    throw new Error(`dimension mismatch: ${a.length} vs ${b.length}`);
  }
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na === 0 || nb === 0) {
    throw new Error("cosine is undefined for a zero vector");
  }
  return Math.max(-1, Math.min(1, dot / Math.sqrt(na * nb)));
}
