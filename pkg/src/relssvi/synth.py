"""Synthetic corpora with planted relation structure.

The generator draws from exactly the model the trainers assume: per-document
mixing weights theta_d ~ Dirichlet(alpha), one relation per sentence, and
per-relation emission distributions beta over each feature type's
vocabulary.  Each relation's beta concentrates on its own block of values,
so the planted assignment is recoverable — this is the oracle behind the
structure-recovery and perplexity tests.

The corpus is round-tripped through the canonical JSONL text before the
planted beta tables are indexed, so value ids always match what a reader of
the emitted file sees.
"""

import json
from dataclasses import dataclass

import numpy as np

from .corpus import parse_corpus, resolve_feature_set
from .errors import ConfigError, DataError
from .fileio import atomic_write_text
from .model import VariationalModel
from .numerics import child_rng

ASSIGNMENTS_FORMAT = "relssvi-assignments/1"


@dataclass
class PlantedCorpus:
    corpus: object
    assignments: dict  # document id -> list of planted relation indices
    beta: list  # per feature type: (R, W_f) emission probabilities (corpus ids)
    alpha: float
    R: int

    def labels_flat(self):
        """Planted sentence labels in corpus order (document, then sentence)."""
        out = []
        for doc in self.corpus.documents:
            out.extend(self.assignments[doc.id])
        return np.asarray(out, dtype=np.int64)


def generate_planted(
    D=500,
    R=5,
    feature_types=("ent_left", "ent_right", "ent_type"),
    values_per_type=25,
    sentences_per_doc=(2, 6),
    tokens_per_type=1,
    within_block=0.98,
    alpha=0.3,
    seed=0,
):
    """Draw a corpus with known per-sentence relations.

    Each feature type's vocabulary is split into R contiguous blocks;
    relation r puts `within_block` of its emission mass on block r (spread
    by a Gamma draw) and the rest uniformly elsewhere.
    """
    if D < 1 or R < 1:
        raise ConfigError("D and R must be >= 1")
    if values_per_type < R:
        raise ConfigError("values_per_type must be >= R (one block per relation)")
    if not (0.0 < within_block <= 1.0):
        raise ConfigError("within_block must be in (0, 1]")
    lo, hi = sentences_per_doc
    if not (1 <= lo <= hi):
        raise ConfigError("sentences_per_doc must be an increasing range from >= 1")
    feature_types = resolve_feature_set(feature_types)
    rng = child_rng(seed, "synth")
    F = len(feature_types)
    W = values_per_type
    base = W // R

    def block_of(j):
        return min(j // base, R - 1)

    value_strings = [f"v{j:03d}" for j in range(W)]
    # planted emission probabilities over the string vocabulary, per type
    beta_str = []
    for _ in range(F):
        beta_f = np.empty((R, W))
        for r in range(R):
            members = [j for j in range(W) if block_of(j) == r]
            inside = rng.gamma(5.0, size=len(members))
            inside = within_block * inside / inside.sum()
            off = (1.0 - within_block) / max(W - len(members), 1)
            beta_f[r] = off
            beta_f[r, members] = inside
            if within_block == 1.0:
                beta_f[r, [j for j in range(W) if block_of(j) != r]] = 0.0
            beta_f[r] /= beta_f[r].sum()
        beta_str.append(beta_f)

    lines = []
    assignments = {}
    for d in range(D):
        doc_id = f"doc{d:05d}"
        theta = rng.dirichlet(np.full(R, alpha))
        n_sent = int(rng.integers(lo, hi + 1))
        z_doc = []
        sentences = []
        for _ in range(n_sent):
            r = int(rng.choice(R, p=theta))
            z_doc.append(r)
            features = {}
            for f, name in enumerate(feature_types):
                draws = rng.choice(W, size=tokens_per_type, p=beta_str[f][r])
                features[name] = sorted(value_strings[j] for j in draws)
            sentences.append({"features": features})
        assignments[doc_id] = z_doc
        lines.append(json.dumps({"id": doc_id, "sentences": sentences}, ensure_ascii=False, separators=(",", ":")))

    corpus = parse_corpus(lines, feature_set=feature_types, source="synthetic corpus")
    # re-index the planted beta by the ids the canonical corpus assigns;
    # values never emitted anywhere are absent, so rows are renormalized
    beta = []
    for f in range(F):
        W_seen = corpus.vocab.size(f)
        beta_f = np.zeros((R, W_seen))
        for j, s in enumerate(value_strings):
            vid = corpus.vocab.id_of(f, s)
            if vid is not None:
                beta_f[:, vid] = beta_str[f][:, j]
        beta_f /= beta_f.sum(axis=1, keepdims=True)
        beta.append(beta_f)

    return PlantedCorpus(corpus=corpus, assignments=assignments, beta=beta, alpha=alpha, R=R)


def planted_model(planted, eta=1e-8, scale=1e6):
    """The planted truth as a model file: lambda = scale * beta.

    With scale >> eta the model's posterior-mean point estimate reproduces
    the planted beta to working precision, so evaluation tooling can score
    the truth through the same interface as any trained model.
    """
    corpus = planted.corpus
    model = VariationalModel(
        R=planted.R,
        feature_types=corpus.feature_types,
        vocab_sizes=corpus.vocab.sizes,
        eta=np.full(corpus.F, eta),
        alpha=planted.alpha,
        vocab_hash=corpus.vocab.content_hash(),
        metadata={"planted": True},
    )
    for f, beta_f in enumerate(planted.beta):
        rows, vals = np.nonzero(beta_f)
        for r, v in zip(rows.tolist(), vals.tolist()):
            model.add_scaled(f, v, r, scale * float(beta_f[r, v]) - eta)
    return model


def write_assignments(planted, path):
    """Planted per-sentence relations, documents in corpus order."""
    obj = {
        "format": ASSIGNMENTS_FORMAT,
        "R": planted.R,
        "relations": {doc.id: planted.assignments[doc.id] for doc in planted.corpus.documents},
    }
    atomic_write_text(path, json.dumps(obj, ensure_ascii=False, indent=1) + "\n")
    return path


def load_assignments(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed assignments file ({exc.msg})") from exc
    if obj.get("format") != ASSIGNMENTS_FORMAT:
        raise DataError(f"unsupported assignments format {obj.get('format')!r}")
    return {doc_id: [int(r) for r in rel] for doc_id, rel in obj["relations"].items()}
