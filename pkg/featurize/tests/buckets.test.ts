import { describe, expect, it } from "vitest";

import { bucketOf } from "../src/buckets.js";

describe("bucketOf", () => {
  it("maps every listed tag to its bucket", () => {
    const expected: Record<string, string> = {
      JJ: "adj",
      JJR: "adj",
      JJS: "adj",
      RB: "adv",
      RBR: "adv",
      RBS: "adv",
      NN: "nn",
      NNS: "nn",
      NNP: "nn",
      NNPS: "nn",
      PRP: "nn",
      WP: "nn",
      IN: "pp",
      TO: "pp",
      VB: "vb",
      VBD: "vb",
      VBG: "vb",
      VBN: "vb",
      VBP: "vb",
      VBZ: "vb",
    };
    for (const [tag, bucket] of Object.entries(expected)) {
      expect(bucketOf(tag), tag).toBe(bucket);
    }
  });

  it("sends everything else to oth", () => {
    for (const tag of ["CD", "DT", ".", ",", "POS", "MD", "CC", "WRB", "UH", "SYM", ""]) {
      expect(bucketOf(tag), tag).toBe("oth");
    }
  });

  it("is case sensitive: lowercase tags are not Penn Treebank tags", () => {
    expect(bucketOf("jj")).toBe("oth");
    expect(bucketOf("vbd")).toBe("oth");
  });
});
