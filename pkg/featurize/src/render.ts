import { FEATURE_TYPES, type FeatureMap, type FeaturizedDocument } from "./types.js";

function canonicalFeatures(features: FeatureMap): Record<string, string[]> {
  const out: Record<string, string[]> = {};
  for (const type of FEATURE_TYPES) {
    const values = features[type];
    if (values && values.length > 0) {
      out[type] = [...values].sort();
    }
  }
  return out;
}

/**
 * One corpus JSON line in the downstream format's canonical form:
 * feature types in registry order, values sorted, compact JSON. Emitting
 * canonical form directly makes output byte-stable and idempotent under
 * the consumer's own canonicalization.
 */
export function renderDocumentLine(doc: FeaturizedDocument): string {
  return JSON.stringify({
    id: doc.id,
    sentences: doc.sentences.map((s) => ({ features: canonicalFeatures(s.features) })),
  });
}
