/** Entity labels produced by the named entity recognizer. */
export const ENTITY_TYPES = ["PER", "ORG", "LOC", "MISC"] as const;
export type EntityType = (typeof ENTITY_TYPES)[number];

/** Token span [start, end) covering one entity mention. */
export interface EntitySpan {
  start: number;
  end: number;
  type: EntityType;
}

/**
 * One sentence with aligned surface tokens and Penn Treebank POS tags.
 * Mention spans are non-overlapping and ordered by start.
 */
export interface TaggedSentence {
  tokens: string[];
  pos: string[];
  entities: EntitySpan[];
}

export interface TaggedDocument {
  id: string;
  sentences: TaggedSentence[];
}

/**
 * Feature type names recognized by the downstream corpus format, in the
 * order its canonical serialization uses.
 */
export const FEATURE_TYPES = [
  "adj",
  "adv",
  "ent_left",
  "ent_right",
  "nn",
  "oth",
  "pp",
  "vb",
  "pos_seq",
  "ent_type",
] as const;
export type FeatureType = (typeof FEATURE_TYPES)[number];

/** Feature values per type; repeated values encode counts. */
export type FeatureMap = Partial<Record<FeatureType, string[]>>;

export interface FeaturizedSentence {
  features: FeatureMap;
}

export interface FeaturizedDocument {
  id: string;
  sentences: FeaturizedSentence[];
}

/** Counters reported on standard error after a run. */
export interface CorpusStats {
  documents_read: number;
  documents_written: number;
  documents_failed: number;
  documents_dropped: number;
  sentences_read: number;
  sentences_written: number;
  sentences_dropped: number;
}
