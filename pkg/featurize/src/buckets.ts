import type { FeatureType } from "./types.js";

/**
 * Coarse part-of-speech buckets for the words between the two mentions.
 * Tags outside every named bucket fall into "oth".
 */
const BUCKET_TAGS: ReadonlyArray<readonly [FeatureType, readonly string[]]> = [
  ["adj", ["JJ", "JJR", "JJS"]],
  ["adv", ["RB", "RBR", "RBS"]],
  ["nn", ["NN", "NNS", "NNP", "NNPS", "PRP", "WP"]],
  ["pp", ["IN", "TO"]],
  ["vb", ["VB", "VBD", "VBG", "VBN", "VBP", "VBZ"]],
];

const TAG_TO_BUCKET: ReadonlyMap<string, FeatureType> = new Map(
  BUCKET_TAGS.flatMap(([bucket, tags]) =>
    tags.map((tag): [string, FeatureType] => [tag, bucket]),
  ),
);

/** The bucket feature type for a Penn Treebank tag. */
export function bucketOf(tag: string): FeatureType {
  return TAG_TO_BUCKET.get(tag) ?? "oth";
}
