"""
Corpus format, canonicalization, and splitting
==============================================

A corpus is a JSON Lines file: one document per line, each document a list
of sentences, each sentence a bag of (feature type, value) observations.
This script builds a tiny corpus by hand, ingests it, prints its statistics,
and produces a train/eval split whose evaluation half is re-encoded under
the frozen training vocabulary.

Equivalent CLI:  relssvi ingest / relssvi split
"""

import json
import tempfile
from pathlib import Path

from relssvi.corpus import (
    corpus_stats,
    corpus_to_text,
    load_corpus,
    split_corpus,
    write_corpus,
)

##############################################################################
# Each sentence carries observations for any subset of the registered
# feature types (entity strings, part-of-speech buckets, tag sequences...).
# Unknown types are rejected; inactive types are ignored.

documents = [
    {"id": "doc-001", "sentences": [
        {"features": {"vb": ["met"], "ent_type": ["PER-PER"]}},
        {"features": {"vb": ["said", "met"], "ent_type": ["PER-ORG"]}},
    ]},
    {"id": "doc-002", "sentences": [
        {"features": {"vb": ["visited"], "ent_type": ["PER-LOC"]}},
    ]},
    {"id": "doc-003", "sentences": [
        {"features": {"vb": ["met"], "ent_type": ["PER-LOC"]}},
        {"features": {"vb": ["bought"]}},
        {"features": {"ent_type": ["ORG-ORG"]}},
    ]},
    {"id": "doc-004", "sentences": [
        {"features": {"vb": ["said"], "ent_type": ["PER-PER"]}},
        {"features": {"vb": ["visited", "said"], "ent_type": ["ORG-ORG"]}},
    ]},
]

workdir = Path(tempfile.mkdtemp(prefix="relssvi-demo-"))
raw_path = workdir / "raw.jsonl"
raw_path.write_text("\n".join(json.dumps(d) for d in documents) + "\n")

##############################################################################
# Loading assigns integer ids per feature type in first-occurrence order.
# The canonical form (sorted values, registry-ordered types, compact JSON)
# is a fixed point: ingesting a canonical file reproduces it byte for byte.

corpus = load_corpus(raw_path, feature_set="vb,ent_type")
canon_path = workdir / "canonical.jsonl"
write_corpus(corpus, canon_path)

print("== corpus statistics ==")
print(json.dumps(corpus_stats(corpus).as_dict(), indent=2))

again = load_corpus(canon_path, feature_set="vb,ent_type")
assert corpus_to_text(again) == canon_path.read_text()
print("\ncanonical form is stable under re-ingestion")

##############################################################################
# The vocabulary hashes its full content; models record the hash so that
# evaluation can verify it is scoring under the vocabulary it was trained
# with.

print(f"vocabulary hash: {corpus.vocab.content_hash()[:16]}...")

##############################################################################
# Splitting shuffles documents with a seeded permutation.  The training
# vocabulary is rebuilt from the training half only and frozen; evaluation
# documents are re-encoded under it, dropping values never seen in training
# (a held-out corpus must not grow the model's vocabulary).

train, evaluation = split_corpus(corpus, eval_fraction=0.25, seed=0)
print(f"\nsplit: {train.D} train documents, {evaluation.D} eval documents")
print(f"eval skipped {evaluation.skipped_sentences} sentences "
      f"and {evaluation.skipped_documents} documents as out-of-vocabulary")

for part, name in ((train, "train"), (evaluation, "eval")):
    path = workdir / f"{name}.jsonl"
    write_corpus(part, path)
    print(f"wrote {path}")
