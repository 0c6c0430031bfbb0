import type { EntitySpan, TaggedSentence } from "./types.js";

export interface EntityPair {
  left: EntitySpan;
  right: EntitySpan;
}

/**
 * The salient entity pair of a sentence: the two mentions closest
 * together, where closeness is the token gap between the end of the left
 * mention and the start of the right. Ties go to the leftmost pair.
 * Returns null when the sentence has fewer than two mentions.
 *
 * Because spans are ordered and non-overlapping, the minimum gap is always
 * attained by a consecutive pair, so only those are examined.
 */
export function selectEntityPair(sentence: TaggedSentence): EntityPair | null {
  const mentions = sentence.entities;
  if (mentions.length < 2) {
    return null;
  }
  let best = 0;
  let bestGap = Infinity;
  for (let i = 0; i + 1 < mentions.length; i++) {
    const gap = mentions[i + 1]!.start - mentions[i]!.end;
    if (gap < bestGap) {
      best = i;
      bestGap = gap;
    }
  }
  return { left: mentions[best]!, right: mentions[best + 1]! };
}
