export { bucketOf } from "./buckets.js";
export { selectEntityPair, type EntityPair } from "./select.js";
export { extractFeatures, featurizeDocument, type DocumentResult } from "./extract.js";
export { renderDocumentLine } from "./render.js";
export { pretaggedAdapter, InputError, type TaggerAdapter } from "./adapter.js";
export {
  featurizeLines,
  mapInOrder,
  type FeaturizeOptions,
  type FeaturizeResult,
} from "./pipeline.js";
export {
  ENTITY_TYPES,
  FEATURE_TYPES,
  type CorpusStats,
  type EntitySpan,
  type EntityType,
  type FeatureMap,
  type FeatureType,
  type FeaturizedDocument,
  type FeaturizedSentence,
  type TaggedDocument,
  type TaggedSentence,
} from "./types.js";
