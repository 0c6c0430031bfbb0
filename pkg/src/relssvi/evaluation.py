"""Held-out perplexity, relation-cluster reports, and comparison curves.

All evaluation runs against a point estimate of the emission distributions:
beta[r, f, v] = lambda / Lambda (for the Gibbs baseline's exported models
this equals the smoothed count ratio (M + eta) / (M_row + W * eta)).  Local
assignment chains under this fixed beta estimate the per-document mixing
weights and per-sentence relation proportions.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .fileio import atomic_write_text
from .numerics import child_rng
from .ssvi import _sweep

log = logging.getLogger(__name__)

REPORT_FORMAT = "relssvi-report/1"


def point_estimate(model):
    """Per-type posterior-mean emission matrices log(beta), shape (R, W_f)."""
    return [np.log(model.beta_mean(f)) for f in range(model.F)]


def _check_vocab(model, corpus):
    if model.vocab_hash and model.vocab_hash != corpus.vocab.content_hash():
        raise DataError("corpus vocabulary does not match the model's vocabulary hash")
    if tuple(model.vocab_sizes) != tuple(corpus.vocab.sizes):
        raise DataError("corpus vocabulary sizes do not match the model")


def _sentence_scores(log_beta, doc):
    """(n_sentences, R) matrix of sum_{f,v} count * log beta[r, f, v]."""
    rows = []
    for sent in doc.sentences:
        acc = np.zeros(log_beta[0].shape[0])
        for f, (vs, cs) in enumerate(sent.token_arrays):
            if len(vs):
                acc += log_beta[f][:, vs] @ cs
        rows.append(acc)
    return np.stack(rows)


def _fixed_beta_chain(scores, alpha, R, sweeps, burnin, rng, doc_id):
    """Assignment chain under fixed beta: sequential init then `sweeps` sweeps.

    Returns (mean occupancy, per-sentence sample proportions) over the
    sweeps - burnin retained sweeps.
    """
    if sweeps <= burnin:
        raise ConfigError("chain sweeps must exceed burn-in")
    n = scores.shape[0]
    z = np.full(n, -1, dtype=np.int64)
    occ = np.zeros(R)
    _sweep(scores, occ, z, alpha, rng, doc_id)
    occ_sum = np.zeros(R)
    tally = np.zeros((n, R))
    for s in range(sweeps):
        _sweep(scores, occ, z, alpha, rng, doc_id)
        if s >= burnin:
            occ_sum += occ
            tally[np.arange(n), z] += 1.0
    kept = sweeps - burnin
    return occ_sum / kept, tally / kept


def perplexity(model, eval_corpus, sweeps=50, burnin=10, seed=0):
    """exp(-held-out log-likelihood per token) under the plug-in estimate.

    Per document: estimate theta from a fixed-beta Gibbs chain,
    theta[r] = (mean occupancy + alpha) / (N_d + R * alpha), then score each
    sentence as log sum_r theta[r] * prod beta^count.  Tokens of every
    active feature type count toward the normalization.
    """
    _check_vocab(model, eval_corpus)
    if eval_corpus.D == 0:
        raise DataError("empty evaluation corpus")
    log_beta = point_estimate(model)
    R = model.R
    total_loglik = 0.0
    total_tokens = 0.0
    for doc in eval_corpus.documents:
        scores = _sentence_scores(log_beta, doc)
        rng = child_rng(seed, "eval", doc.id)
        occ_mean, _ = _fixed_beta_chain(scores, model.alpha, R, sweeps, burnin, rng, doc.id)
        n_d = doc.n_sentences
        log_theta = np.log((occ_mean + model.alpha) / (n_d + R * model.alpha))
        combined = log_theta[None, :] + scores
        m = combined.max(axis=1)
        if not np.all(np.isfinite(m)):
            raise NumericalError(f"zero predictive probability in document {doc.id!r}")
        sentence_logliks = m + np.log(np.exp(combined - m[:, None]).sum(axis=1))
        total_loglik += float(sentence_logliks.sum())
        total_tokens += sum(sent.total_tokens for sent in doc.sentences)
    if total_tokens == 0:
        raise DataError("evaluation corpus has no tokens")
    return float(np.exp(-total_loglik / total_tokens))


def assignment_proportions(model, corpus, n_samples=50, burnin=10, seed=0):
    """Per-sentence relation proportions from n_samples retained snapshots.

    Returns {document id: (n_sentences, R) array}; rows sum to 1.  Chains
    are keyed by document id, so results do not depend on document order.
    """
    _check_vocab(model, corpus)
    log_beta = point_estimate(model)
    out = {}
    for doc in corpus.documents:
        scores = _sentence_scores(log_beta, doc)
        rng = child_rng(seed, "rank", doc.id)
        _, tally = _fixed_beta_chain(
            scores, model.alpha, model.R, burnin + n_samples, burnin, rng, doc.id
        )
        out[doc.id] = tally
    return out


def map_assignments(model, corpus, n_samples=50, burnin=10, seed=0):
    """Most-sampled relation per sentence: {document id: (n_sentences,) ints}."""
    props = assignment_proportions(model, corpus, n_samples=n_samples, burnin=burnin, seed=seed)
    return {doc_id: np.argmax(tally, axis=1) for doc_id, tally in props.items()}


def normalized_mutual_information(labels_a, labels_b):
    """NMI with arithmetic-mean normalization, in [0, 1]."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape or a.size == 0:
        raise ConfigError("label sequences must be non-empty and equal length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka, kb = ai.max() + 1, bi.max() + 1
    if ka == 1 and kb == 1:
        return 1.0
    joint = np.zeros((ka, kb))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= a.size
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / np.outer(pa, pb)[nz])))
    ha = -float(np.sum(pa[pa > 0] * np.log(pa[pa > 0])))
    hb = -float(np.sum(pb[pb > 0] * np.log(pb[pb > 0])))
    denom = 0.5 * (ha + hb)
    if denom <= 0.0:
        return 0.0
    return max(0.0, min(1.0, mi / denom))


def render_sentence(vocab, sentence):
    """Slash-separated "type=value" rendering in registry order."""
    parts = []
    for f, name in enumerate(vocab.feature_types):
        values = []
        for vid, count in sentence.counts[f].items():
            values.extend([vocab.decode(f, vid)] * int(count))
        for value in sorted(values):
            parts.append(f"{name}={value}")
    return " / ".join(parts)


@dataclass
class RankedSentence:
    doc_id: str
    sentence_index: int
    proportion: float
    features: str


@dataclass
class ClusterReport:
    """Per relation: sentences most strongly associated with it."""

    R: int
    top_k: int
    relations: list  # per relation: list of RankedSentence, ranked

    def to_json_obj(self):
        return {
            "format": REPORT_FORMAT,
            "R": self.R,
            "top_k": self.top_k,
            "relations": [
                [
                    {
                        "doc": s.doc_id,
                        "sentence": s.sentence_index,
                        "proportion": s.proportion,
                        "features": s.features,
                    }
                    for s in rel
                ]
                for rel in self.relations
            ],
        }

    def save(self, path):
        atomic_write_text(path, json.dumps(self.to_json_obj(), ensure_ascii=False, indent=1) + "\n")
        return path


def rank_sentences(model, corpus, n_samples=50, top_k=10, burnin=10, seed=0):
    """Top sentences per relation by sampled association proportion.

    Ties are broken by (document id, sentence index) so output is
    deterministic under seed and independent of document processing order.
    """
    props = assignment_proportions(model, corpus, n_samples=n_samples, burnin=burnin, seed=seed)
    doc_by_id = {doc.id: doc for doc in corpus.documents}
    relations = []
    for r in range(model.R):
        candidates = []
        for doc_id in sorted(props):
            tally = props[doc_id]
            for i in range(tally.shape[0]):
                p = float(tally[i, r])
                if p > 0.0:
                    candidates.append((-p, doc_id, i))
        candidates.sort()
        ranked = []
        for negp, doc_id, i in candidates[:top_k]:
            doc = doc_by_id[doc_id]
            ranked.append(
                RankedSentence(
                    doc_id=doc_id,
                    sentence_index=i,
                    proportion=-negp,
                    features=render_sentence(corpus.vocab, doc.sentences[i]),
                )
            )
        relations.append(ranked)
    return ClusterReport(R=model.R, top_k=top_k, relations=relations)


def _checkpoints(rows):
    out = {}
    for row in rows:
        perp = row.get("eval_perplexity")
        if perp in (None, ""):
            continue
        out[int(float(row["document_sweeps_cumulative"]))] = float(perp)
    return out


def comparison_curves(ssvi_rows, gibbs_rows):
    """Align two metrics logs by cumulative sampling document-steps.

    Returns (rows, warnings): rows are dicts with document_sweeps,
    ssvi_perplexity, gibbs_perplexity (None where that log has no
    checkpoint); warnings describe missing data.
    """
    ssvi_points = _checkpoints(ssvi_rows)
    gibbs_points = _checkpoints(gibbs_rows)
    warnings = []
    if not ssvi_points:
        warnings.append("no SSVI perplexity checkpoints")
    if not gibbs_points:
        warnings.append("no Gibbs perplexity checkpoints")
    steps = sorted(set(ssvi_points) | set(gibbs_points))
    rows = []
    gaps = 0
    for s in steps:
        a = ssvi_points.get(s)
        b = gibbs_points.get(s)
        if ssvi_points and gibbs_points and (a is None or b is None):
            gaps += 1
        rows.append({"document_sweeps": s, "ssvi_perplexity": a, "gibbs_perplexity": b})
    if gaps:
        warnings.append(f"{gaps} step value(s) present in only one log")
    for w in warnings:
        log.warning("%s", w)
    return rows, warnings
