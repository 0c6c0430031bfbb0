"""Minibatch stochastic variational inference with sparse updates.

Each iteration samples S documents without replacement, runs a short
collapsed Gibbs chain per document against the current variational
parameters (B burn-in sweeps, then S' estimation sweeps), averages the
resulting per-relation count tables into N-hat, and takes a natural-gradient
step

    lambda[r, f, v] <- lambda + rho * ((D / S) * nhat[r, f, v] + eta[f] - lambda)

realized sparsely: the (1 - rho) shrink is folded into the model's pi
scalar and only entries observed in the minibatch are written.
"""

import concurrent.futures
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .model import LearningSchedule, init_model
from .numerics import categorical_sample, child_rng, digamma, log_gamma

# Learning rates are clamped strictly below 1: rho = 1 would zero pi and
# with it every accumulated pseudocount.
RHO_MAX = 1.0 - 1e-6


@dataclass
class SsviConfig:
    """Iteration-loop parameters (model-size parameters live on the model)."""

    S: int = 256
    S_prime: int = 25
    burnin: int = 5
    T: int = 100
    schedule: LearningSchedule = field(default_factory=lambda: LearningSchedule(0.01, 10.0, 0.51))
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.S < 1:
            raise ConfigError("minibatch size S must be >= 1")
        if self.S_prime < 1:
            raise ConfigError("estimation sweep count S' must be >= 1")
        if self.burnin < 0:
            raise ConfigError("burn-in count must be >= 0")
        if self.T < 1:
            raise ConfigError("iteration count T must be >= 1")
        if self.workers < 1:
            raise ConfigError("worker count must be >= 1")


def minibatch_indices(seed, t, D, S):
    """Document indices for iteration t: uniform without replacement."""
    if S > D:
        raise ConfigError(f"minibatch size {S} exceeds corpus size {D}")
    rng = child_rng(seed, "minibatch", t)
    return rng.choice(D, size=S, replace=False)


def chain_rng(seed, t, doc_id):
    """The RNG stream for document doc_id's chain in iteration t.

    Keyed by (seed, iteration, document id) so chain draws do not depend on
    worker scheduling or on which other documents share the minibatch.
    """
    return child_rng(seed, "chain", t, doc_id)


class PsiTables:
    """Digamma tables for one iteration's frozen lambda.

    psi_row[f][r] = psi(Lambda[r, f]); psi_col[f][v] = psi(lambda[:, f, v])
    for every value v appearing in the given documents.  Building these once
    per iteration shares the digamma work across documents and sweeps.
    """

    def __init__(self, model, documents=()):
        self.R = model.R
        # feature types with empty vocabularies are never referenced by any
        # sentence; give them a placeholder row instead of digamma(0)
        self.psi_row = [
            digamma(model.row_totals(f)) if model.vocab_sizes[f] > 0 else np.zeros(model.R)
            for f in range(model.F)
        ]
        touched = [set() for _ in range(model.F)]
        for doc in documents:
            for sent in doc.sentences:
                for f, (vs, _) in enumerate(sent.token_arrays):
                    touched[f].update(vs.tolist())
        self.psi_col = []
        for f in range(model.F):
            vs = sorted(touched[f])
            table = {}
            if vs:
                lam = np.empty((len(vs), model.R))
                for k, v in enumerate(vs):
                    lam[k] = model.lambda_column(f, v)
                cols = digamma(lam)
                for k, v in enumerate(vs):
                    table[v] = cols[k]
            self.psi_col.append(table)

    def sentence_loglik(self, sentence):
        """Sum over (f, v) of count * (psi(lambda) - psi(Lambda)), per relation."""
        acc = np.zeros(self.R)
        for f, (vs, cs) in enumerate(sentence.token_arrays):
            if len(vs) == 0:
                continue
            table = self.psi_col[f]
            row = self.psi_row[f]
            for v, c in zip(vs.tolist(), cs):
                acc += c * (table[v] - row)
        return acc


def sentence_loglik(model, sentence):
    """Per-relation log-likelihood part of the assignment conditional."""
    acc = np.zeros(model.R)
    for f, (vs, cs) in enumerate(sentence.token_arrays):
        if len(vs) == 0:
            continue
        row = digamma(model.row_totals(f))
        for v, c in zip(vs.tolist(), cs):
            acc += c * (digamma(model.lambda_column(f, v)) - row)
    return acc


def _weights_from_logs(logw, doc_id, o):
    """Max-subtracted exponentiation with a finiteness check."""
    m = np.max(logw)
    if not np.isfinite(m):
        bad = int(np.argmax(~np.isfinite(logw)))
        raise NumericalError(
            f"non-finite assignment weight (document {doc_id!r}, sentence {o}, relation {bad})"
        )
    return np.exp(logw - m)


def gibbs_conditional(model, state, docs, d, o):
    """Unnormalized weights over relations for sentence o of document d.

    Precondition: sentence o's current assignment has already been removed
    from state.occupancy[d].  weight_r is proportional to

        (O[d, r] + alpha) * exp(sum_{f,v} N[o, f, v] * (psi(lambda) - psi(Lambda)))

    computed in log space and exponentiated after subtracting the maximum.
    """
    doc = docs[d]
    logw = np.log(state.occupancy[d] + model.alpha) + sentence_loglik(model, doc.sentences[o])
    return _weights_from_logs(logw, doc.id, o)


def _sweep(logliks, occ, z, alpha, rng, doc_id):
    """One Gibbs sweep over a document's sentences (in place).

    Sentences still unassigned (z == -1) are simply assigned, which makes the
    first call double as the sequential initialization pass.
    """
    n = len(z)
    for o in range(n):
        r_old = z[o]
        if r_old >= 0:
            occ[r_old] -= 1.0
        w = _weights_from_logs(np.log(occ + alpha) + logliks[o], doc_id, o)
        r = categorical_sample(rng, w)
        z[o] = r
        occ[r] += 1.0
    if int(occ.sum()) != n:
        raise NumericalError(f"occupancy lost sentences for document {doc_id!r}")


@dataclass
class ChainResult:
    """Per-document chain output: mean counts, occupancy snapshots, tallies."""

    nhat: list  # per feature type: {value id: (R,) mean count vector}
    occupancy_snapshots: np.ndarray  # (S', R)
    tally: np.ndarray  # (n_sentences, R) sample proportions


def run_local_chain(model, doc, config, rng, logliks=None):
    """Estimate E[N_{drfv}] for one document by collapsed Gibbs sampling.

    Initializes assignments sequentially from the conditional, runs
    config.burnin full sweeps, then config.S_prime sweeps whose count tables
    are averaged into nhat.  Returns the per-sweep occupancy snapshots too
    (the alpha gradient needs them).
    """
    n = doc.n_sentences
    if n == 0:
        raise DataError(f"document {doc.id!r} has no sentences")
    R = model.R
    if logliks is None:
        tables = PsiTables(model, [doc])
        logliks = np.stack([tables.sentence_loglik(s) for s in doc.sentences])
    z = np.full(n, -1, dtype=np.int64)
    occ = np.zeros(R)
    for _ in range(1 + config.burnin):  # sequential init + burn-in
        _sweep(logliks, occ, z, model.alpha, rng, doc.id)
    snapshots = np.empty((config.S_prime, R))
    tally = np.zeros((n, R))
    for s in range(config.S_prime):
        _sweep(logliks, occ, z, model.alpha, rng, doc.id)
        snapshots[s] = occ
        tally[np.arange(n), z] += 1.0
    tally /= config.S_prime
    nhat = [dict() for _ in range(model.F)]
    for i, sent in enumerate(doc.sentences):
        probs = tally[i]
        for f, (vs, cs) in enumerate(sent.token_arrays):
            table = nhat[f]
            for v, c in zip(vs.tolist(), cs):
                vec = table.get(v)
                if vec is None:
                    table[v] = c * probs
                else:
                    vec += c * probs
    return ChainResult(nhat=nhat, occupancy_snapshots=snapshots, tally=tally)


def natural_gradient(model, nhat_sum, D, S):
    """Sparse natural gradient (D/S) * nhat + eta - lambda over touched entries.

    Entries outside nhat_sum have the implicit gradient eta - lambda, which
    the update step realizes exactly through the pi rescaling; they are not
    materialized here.
    """
    grad = [dict() for _ in range(model.F)]
    for f in range(model.F):
        for v, vec in nhat_sum[f].items():
            grad[f][v] = (D / S) * vec + model.eta[f] - model.lambda_column(f, v)
    return grad


def elbo_proxy(model, nhat_sum, D, S, tables=None):
    """Monte Carlo ELBO estimate (up to terms constant in lambda).

    Evaluates, with E[N] replaced by the minibatch estimate scaled by D/S,

        (D/S) * sum nhat * (psi(lambda) - psi(Lambda))
        + sum_{r,f} [ sum_v (eta - lambda) * (psi(lambda) - psi(Lambda))
                      + sum_v log Gamma(lambda) - log Gamma(Lambda) ]

    The model-only part is computed from stored entries plus a closed form
    for the untouched ones (where lambda == eta exactly).
    """
    if tables is None:
        tables = PsiTables(model, ())
        for f in range(model.F):
            vs = sorted(nhat_sum[f])
            if vs:
                lam = np.stack([model.lambda_column(f, v) for v in vs])
                cols = digamma(lam)
                tables.psi_col[f] = {v: cols[k] for k, v in enumerate(vs)}
    term1 = 0.0
    for f in range(model.F):
        row = tables.psi_row[f]
        for v, vec in nhat_sum[f].items():
            term1 += float(np.dot(vec, tables.psi_col[f][v] - row))
    term1 *= D / S
    term2 = 0.0
    for f in range(model.F):
        W = model.vocab_sizes[f]
        if W == 0:
            continue
        eta = model.eta[f]
        totals = model.row_totals(f)
        psi_tot = digamma(totals)
        entries = [(r, model.pi * s + eta) for v, col in model.cols[f].items() for r, s in col.items()]
        if entries:
            r_idx = np.array([e[0] for e in entries], dtype=np.int64)
            lam = np.array([e[1] for e in entries])
            psi_lam = digamma(lam)
            term2 += float(np.sum((eta - lam) * (psi_lam - psi_tot[r_idx])))
            term2 += float(np.sum(log_gamma(lam)))
        untouched = W * model.R - int(np.sum(model.row_nnz[f]))
        term2 += untouched * log_gamma(eta)
        term2 -= float(np.sum(log_gamma(totals)))
    return term1 + term2


@dataclass
class StepDiagnostics:
    """What one SSVI iteration reports upward."""

    iteration: int
    rho: float
    elbo: float
    doc_ids: list
    occupancy_snapshots: list  # aligned with doc_ids (document-id order)
    tallies: dict  # doc id -> (n_sentences, R) sample proportions


def ssvi_step(model, minibatch, config, D, executor=None):
    """One natural-gradient iteration over a sampled minibatch.

    Chains run independently (optionally on executor) with RNG streams keyed
    by (seed, iteration, document id); their count tables are merged in
    document-id order, then the model is updated in place:
    pi <- pi * (1 - rho) applies the shrink to every entry, and touched
    entries receive rho * (D/S) * nhat / pi_new.  Equivalent to the dense
    update lambda <- (1 - rho) * lambda + rho * ((D/S) * nhat + eta).
    """
    t = model.t
    rho = min(config.schedule.rate(t), RHO_MAX)
    S = len(minibatch)
    if S == 0:
        raise ConfigError("empty minibatch")
    tables = PsiTables(model, minibatch)

    def run_one(doc):
        logliks = np.stack([tables.sentence_loglik(s) for s in doc.sentences])
        return run_local_chain(model, doc, config, chain_rng(config.seed, t, doc.id), logliks=logliks)

    if executor is not None:
        results = list(executor.map(run_one, minibatch))
    else:
        results = [run_one(doc) for doc in minibatch]

    order = sorted(range(S), key=lambda i: minibatch[i].id)
    nhat_sum = [dict() for _ in range(model.F)]
    for i in order:
        for f in range(model.F):
            table = nhat_sum[f]
            for v, vec in results[i].nhat[f].items():
                if v in table:
                    table[v] = table[v] + vec
                else:
                    table[v] = vec.copy()

    elbo = elbo_proxy(model, nhat_sum, D, S, tables=tables)

    model.decay(rho)
    scale = rho * (D / S) / model.pi
    for f in range(model.F):
        for v in sorted(nhat_sum[f]):
            vec = nhat_sum[f][v]
            for r in np.nonzero(vec)[0]:
                model.add_scaled(f, int(v), int(r), scale * float(vec[r]))
    model.renormalize()
    model.prune()
    model.t = t + 1

    return StepDiagnostics(
        iteration=model.t,
        rho=rho,
        elbo=elbo,
        doc_ids=[minibatch[i].id for i in order],
        occupancy_snapshots=[results[i].occupancy_snapshots for i in order],
        tallies={minibatch[i].id: results[i].tally for i in range(S)},
    )


def _check_model_health(model):
    for f in range(model.F):
        if np.any(model.row_scaled[f] < 0.0):
            raise NumericalError(f"negative pseudocount mass for feature type {f}")
    model.check_invariants()


def _dump_diagnostics(model, row, stream=None):
    stream = stream or sys.stderr
    info = {
        "iteration": model.t,
        "pi": model.pi,
        "alpha": model.alpha,
        "eta": [float(e) for e in model.eta],
        "metrics_row": {k: (v if v is None or isinstance(v, str) else float(v)) for k, v in row.items()},
    }
    print("training abort diagnostics: " + json.dumps(info), file=stream)


def train(
    corpus,
    config,
    *,
    R=None,
    model=None,
    eta0=0.1,
    alpha0=0.1,
    hyper=None,
    metrics=None,
    eval_corpus=None,
    eval_every=0,
    eval_sweeps=50,
    eval_burnin=10,
):
    """Run config.T SSVI iterations, returning the updated model.

    Either an existing model or R (plus eta0/alpha0 starting values) must be
    given.  When hyper is a HyperOptConfig, eta/alpha natural-gradient
    updates run after each lambda step with the same rho.  Metrics rows are
    appended to the given MetricsLog; eval perplexity is computed every
    eval_every iterations when an eval corpus is supplied.
    """
    from .evaluation import perplexity  # deferred: evaluation imports this module
    from .hyperopt import hyper_step

    D = corpus.D
    if config.S > D:
        raise ConfigError(f"minibatch size {config.S} exceeds corpus size {D}")
    if model is None:
        if R is None:
            raise ConfigError("either a model or R must be provided")
        model = init_model(corpus, R, eta0, alpha0, config.seed)
    elif model.vocab_hash and model.vocab_hash != corpus.vocab.content_hash():
        raise DataError("model vocabulary hash does not match the corpus")

    executor = None
    try:
        if config.workers > 1:
            executor = concurrent.futures.ThreadPoolExecutor(max_workers=config.workers)
        for _ in range(config.T):
            t = model.t
            idx = minibatch_indices(config.seed, t, D, config.S)
            minibatch = [corpus.documents[i] for i in idx]
            diag = ssvi_step(model, minibatch, config, D, executor=executor)
            row = {
                "iteration": diag.iteration,
                "rho": diag.rho,
                "elbo_proxy": diag.elbo,
                "document_sweeps_cumulative": diag.iteration * config.S * config.S_prime,
                "burnin_sweeps_cumulative": diag.iteration * config.S * config.burnin,
                "eval_perplexity": None,
            }
            if hyper is not None:
                row.update(hyper_step(model, diag, D=D, S=config.S, rho=diag.rho, config=hyper))
            _check_model_health(model)
            if eval_corpus is not None and eval_every > 0 and diag.iteration % eval_every == 0:
                row["eval_perplexity"] = perplexity(
                    model,
                    eval_corpus,
                    sweeps=eval_sweeps,
                    burnin=eval_burnin,
                    seed=child_rng(config.seed, "train-eval-seed", t).integers(2**32),
                )
            bad = [k for k, v in row.items() if isinstance(v, float) and not np.isfinite(v)]
            if bad:
                _dump_diagnostics(model, row)
                raise NumericalError(f"non-finite metric {bad[0]} at iteration {diag.iteration}")
            if metrics is not None:
                metrics.add(row)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    return model
