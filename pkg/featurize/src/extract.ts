import { bucketOf } from "./buckets.js";
import { selectEntityPair, type EntityPair } from "./select.js";
import type {
  EntitySpan,
  FeatureMap,
  FeaturizedDocument,
  FeaturizedSentence,
  TaggedDocument,
  TaggedSentence,
} from "./types.js";

/** Mention surface: covered tokens joined with single spaces, case preserved. */
function surface(sentence: TaggedSentence, span: EntitySpan): string {
  return sentence.tokens.slice(span.start, span.end).join(" ");
}

/**
 * Feature values for a sentence under its selected mention pair.
 *
 * Entity features carry the mention surfaces and the "LEFT-RIGHT" type
 * pair. Every token strictly between the mentions lands in exactly one
 * coarse POS bucket (lowercased), and the full tag sequence between the
 * mentions becomes one pos_seq value; when the mentions are adjacent the
 * bucket features and pos_seq are omitted entirely.
 */
export function extractFeatures(sentence: TaggedSentence, pair: EntityPair): FeatureMap {
  const features: FeatureMap = {
    ent_left: [surface(sentence, pair.left)],
    ent_right: [surface(sentence, pair.right)],
    ent_type: [`${pair.left.type}-${pair.right.type}`],
  };
  const tags: string[] = [];
  for (let j = pair.left.end; j < pair.right.start; j++) {
    const tag = sentence.pos[j]!;
    const bucket = bucketOf(tag);
    (features[bucket] ??= []).push(sentence.tokens[j]!.toLowerCase());
    tags.push(tag);
  }
  if (tags.length > 0) {
    features.pos_seq = [tags.join(" ")];
  }
  return features;
}

export interface DocumentResult {
  /** null when no sentence qualifies (document dropped). */
  doc: FeaturizedDocument | null;
  sentencesRead: number;
  sentencesWritten: number;
}

/** Featurize every sentence with at least two mentions; drop the rest. */
export function featurizeDocument(tagged: TaggedDocument): DocumentResult {
  const sentences: FeaturizedSentence[] = [];
  for (const sentence of tagged.sentences) {
    const pair = selectEntityPair(sentence);
    if (pair === null) {
      continue;
    }
    sentences.push({ features: extractFeatures(sentence, pair) });
  }
  return {
    doc: sentences.length > 0 ? { id: tagged.id, sentences } : null,
    sentencesRead: tagged.sentences.length,
    sentencesWritten: sentences.length,
  };
}
