"""Fully collapsed Gibbs sampler over the whole corpus (baseline trainer).

Both the per-document mixing distributions and the per-relation emission
distributions are integrated out, so the only state is the assignment
vector plus the count tables it induces.  The conditional for reassigning
sentence o of document d is the Dirichlet-multinomial predictive of the
whole sentence:

    weight_r = (O[d, r] + alpha)
               * prod_f [ prod_v prod_{k=0}^{c_v-1} (M[r, f, v] + eta_f + k) ]
                       / prod_{j=0}^{n_f-1} (M[r, f] + W_f * eta_f + j)

where counts M exclude the sentence itself and the ascending offsets handle
repeated values within the sentence exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .model import AssignmentState, VariationalModel
from .numerics import categorical_sample, child_rng
from .ssvi import _weights_from_logs


class GibbsState:
    """Assignments plus incrementally maintained count tables."""

    def __init__(self, corpus, R, eta, alpha):
        if R < 1:
            raise ConfigError("R must be >= 1")
        self.R = R
        self.docs = corpus.documents
        self.vocab_sizes = corpus.vocab.sizes
        self.feature_types = corpus.feature_types
        self.eta = np.asarray(
            np.full(corpus.F, eta) if np.isscalar(eta) else eta, dtype=np.float64
        )
        if self.eta.shape != (corpus.F,) or np.any(self.eta <= 0.0):
            raise ConfigError("eta must be positive, one value per feature type")
        if alpha <= 0.0:
            raise ConfigError("alpha must be positive")
        self.alpha = float(alpha)
        self.assign = AssignmentState([doc.n_sentences for doc in self.docs], R)
        # topic_counts[f][r, v] = M_{rfv}; row_counts[f][r] = M_{rf}
        self.topic_counts = [np.zeros((R, W)) for W in self.vocab_sizes]
        self.row_counts = [np.zeros(R) for _ in self.vocab_sizes]

    def _apply(self, d, i, r, sign):
        sent = self.docs[d].sentences[i]
        for f, (vs, cs) in enumerate(sent.token_arrays):
            if len(vs) == 0:
                continue
            self.topic_counts[f][r, vs] += sign * cs
            self.row_counts[f][r] += sign * cs.sum()
            if sign < 0 and (self.topic_counts[f][r, vs].min() < 0 or self.row_counts[f][r] < 0):
                raise NumericalError(
                    f"negative count after removing sentence {i} of document {self.docs[d].id!r}"
                )

    def remove_sentence(self, d, i):
        r = self.assign.unassign(d, i)
        if r >= 0:
            self._apply(d, i, r, -1.0)
        return r

    def add_sentence(self, d, i, r):
        self.assign.assign(d, i, r)
        self._apply(d, i, r, +1.0)

    def check_counts(self):
        """Rebuild every count table from the assignments; exact match required."""
        topic = [np.zeros_like(m) for m in self.topic_counts]
        occupancy = np.zeros_like(self.assign.occupancy)
        for d, doc in enumerate(self.docs):
            for i, sent in enumerate(doc.sentences):
                r = self.assign.z[d][i]
                if r < 0:
                    continue
                occupancy[d, r] += 1.0
                for f, (vs, cs) in enumerate(sent.token_arrays):
                    if len(vs):
                        topic[f][r, vs] += cs
        for f in range(len(self.topic_counts)):
            if not np.array_equal(topic[f], self.topic_counts[f]):
                raise NumericalError(f"topic counts drifted for feature type {f}")
            if not np.array_equal(topic[f].sum(axis=1), self.row_counts[f]):
                raise NumericalError(f"row counts drifted for feature type {f}")
        if not np.array_equal(occupancy, self.assign.occupancy):
            raise NumericalError("occupancy counts drifted")

    def to_model(self, vocab_hash="", metadata=None):
        """Export as a variational-model file: lambda = M + eta (pi = 1)."""
        model = VariationalModel(
            R=self.R,
            feature_types=self.feature_types,
            vocab_sizes=self.vocab_sizes,
            eta=self.eta,
            alpha=self.alpha,
            vocab_hash=vocab_hash,
            metadata=metadata,
        )
        for f, counts in enumerate(self.topic_counts):
            rows, vals = np.nonzero(counts)
            for r, v in zip(rows.tolist(), vals.tolist()):
                model.add_scaled(f, v, r, float(counts[r, v]))
        return model


def gibbs_full_conditional(state, d, o):
    """Exact collapsed conditional weights for sentence o of document d.

    Precondition: the sentence has been removed from every count table.
    """
    doc = state.docs[d]
    sent = doc.sentences[o]
    logw = np.log(state.assign.occupancy[d] + state.alpha)
    for f, (vs, cs) in enumerate(sent.token_arrays):
        if len(vs) == 0:
            continue
        eta = state.eta[f]
        denom_base = state.row_counts[f] + state.vocab_sizes[f] * eta
        n_f = 0
        for v, c in zip(vs.tolist(), cs):
            col = state.topic_counts[f][:, v] + eta
            for k in range(int(c)):
                logw += np.log(col + k)
            n_f += int(c)
        for j in range(n_f):
            logw -= np.log(denom_base + j)
    return _weights_from_logs(logw, doc.id, o)


def gibbs_sweep(state, rng, init_only=False):
    """One systematic sweep in document order, resampling every sentence."""
    for d, doc in enumerate(state.docs):
        for i in range(doc.n_sentences):
            if state.assign.z[d][i] >= 0:
                if init_only:
                    continue
                state.remove_sentence(d, i)
            w = gibbs_full_conditional(state, d, i)
            state.add_sentence(d, i, categorical_sample(rng, w))


@dataclass
class GibbsRunResult:
    state: GibbsState
    sweeps_run: int


def run_gibbs(
    corpus,
    R,
    eta,
    alpha,
    sweeps,
    seed,
    metrics=None,
    eval_corpus=None,
    eval_every=0,
    eval_sweeps=50,
    eval_burnin=10,
    check_every=100,
):
    """Sequential initialization followed by `sweeps` systematic sweeps.

    Hyperparameters stay fixed for the whole run.  Metrics rows mirror the
    SSVI trainer's: one row per sweep with document_sweeps_cumulative =
    sweep * D (the initialization pass is reported in the burn-in column).
    """
    from .evaluation import perplexity  # deferred: evaluation imports model helpers

    if sweeps < 0:
        raise ConfigError("sweep count must be >= 0")
    state = GibbsState(corpus, R, eta, alpha)
    rng = child_rng(seed, "gibbs")
    D = corpus.D
    gibbs_sweep(state, rng, init_only=True)
    for sweep in range(1, sweeps + 1):
        gibbs_sweep(state, rng)
        if check_every and sweep % check_every == 0:
            state.check_counts()
        if metrics is not None:
            row = {
                "iteration": sweep,
                "document_sweeps_cumulative": sweep * D,
                "burnin_sweeps_cumulative": D,
                "eval_perplexity": None,
            }
            if eval_corpus is not None and eval_every > 0 and sweep % eval_every == 0:
                snapshot = state.to_model(vocab_hash=corpus.vocab.content_hash())
                snapshot.t = sweep
                row["eval_perplexity"] = perplexity(
                    snapshot,
                    eval_corpus,
                    sweeps=eval_sweeps,
                    burnin=eval_burnin,
                    seed=child_rng(seed, "gibbs-eval-seed", sweep).integers(2**32),
                )
            metrics.add(row)
    state.check_counts()
    return GibbsRunResult(state=state, sweeps_run=sweeps)
