import json

import numpy as np
import pytest

from relssvi.corpus import parse_corpus

# Verdict lines recorded by the acceptance tests, replayed after the run so
# they survive pytest's fd-level capture and land in piped/teed output.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def doc_line(doc_id, sentences):
    """One corpus JSONL line; sentences = list of {type: [values]} dicts."""
    return json.dumps(
        {"id": doc_id, "sentences": [{"features": feats} for feats in sentences]},
        ensure_ascii=False,
        separators=(",", ":"),
    )


def corpus_from(sentence_dicts_by_doc, feature_set=None):
    lines = [doc_line(doc_id, sents) for doc_id, sents in sentence_dicts_by_doc]
    return parse_corpus(lines, feature_set=feature_set, source="inline corpus")


def model_from_lambda(lam_by_type, eta, alpha=1.0, types=("vb", "ent_type")):
    """Build a model whose materialized lambda equals the given matrices."""
    from relssvi.model import VariationalModel

    lam_by_type = [np.asarray(m, dtype=float) for m in lam_by_type]
    model = VariationalModel(
        R=lam_by_type[0].shape[0],
        feature_types=types[: len(lam_by_type)],
        vocab_sizes=tuple(m.shape[1] for m in lam_by_type),
        eta=np.asarray(eta, dtype=float),
        alpha=alpha,
    )
    for f, m in enumerate(lam_by_type):
        for r in range(m.shape[0]):
            for v in range(m.shape[1]):
                if m[r, v] != model.eta[f]:
                    model.add_scaled(f, v, r, m[r, v] - model.eta[f])
    return model


def random_corpus(D, seed, types=("vb", "ent_type"), n_values=(6, 4),
                  max_sentences=4, max_tokens=3):
    """Small random corpus for fuzz-style checks; deterministic under seed."""
    rng = np.random.default_rng(seed)
    docs = []
    for d in range(D):
        sents = []
        for _ in range(int(rng.integers(1, max_sentences + 1))):
            feats = {}
            for name, W in zip(types, n_values):
                k = int(rng.integers(0, max_tokens + 1))
                if k:
                    feats[name] = [f"{name}{int(rng.integers(W)):02d}"
                                   for _ in range(k)]
            if not feats:  # keep every sentence observable
                feats[types[0]] = [f"{types[0]}{int(rng.integers(n_values[0])):02d}"]
            sents.append(feats)
        docs.append((f"doc{d:04d}", sents))
    return corpus_from(docs, feature_set=",".join(types))


@pytest.fixture
def tiny_corpus():
    """Three documents over two feature types, small enough to enumerate."""
    return corpus_from(
        [
            ("doc-a", [{"vb": ["said"], "ent_type": ["PER-ORG"]},
                       {"vb": ["met", "met"], "ent_type": ["PER-PER"]}]),
            ("doc-b", [{"vb": ["said"], "ent_type": ["PER-PER"]}]),
            ("doc-c", [{"vb": ["visited"], "ent_type": ["ORG-LOC"]},
                       {"vb": ["said"]},
                       {"ent_type": ["PER-ORG"]}]),
        ],
        feature_set="vb,ent_type",
    )
