"""Variational model state with sparse scaled pseudocounts.

The per-relation Dirichlet parameters factor as

    lambda[r, f, v] = pi * scaled[r, f, v] + eta[f]

where pi is the running product of (1 - rho_t) over all past iterations and
scaled[] stores only entries ever touched by a minibatch.  Multiplying pi
once per iteration applies the (1 - rho) decay to every entry at O(1) cost,
so an update step only writes the entries observed in its minibatch.  Row
totals Lambda[r, f] = sum_v lambda[r, f, v] are derived from incrementally
maintained per-row sums of scaled[], never from a dense scan.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .fileio import atomic_write_text
from .numerics import child_rng

MODEL_FORMAT = "relssvi-model/1"

# Entries whose materialized contribution drops below PRUNE_FACTOR * eta_f
# are indistinguishable from the prior at working precision; dropping them
# bounds memory over long runs.
PRUNE_FACTOR = 1e-12

# Fold pi into the stored entries before it underflows.
PI_RENORM_FLOOR = 1e-100


@dataclass(frozen=True)
class LearningSchedule:
    """Step-size schedule rho(t) = a / (b + t)**c, clamped to at most 1."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0.0):
            raise ConfigError("schedule parameter a must be positive")
        if not (self.b > 0.0):
            raise ConfigError("schedule parameter b must be positive")
        if not (0.5 < self.c <= 1.0):
            raise ConfigError("schedule exponent c must lie in (1/2, 1]")

    def rate(self, t):
        if t < 0:
            raise ConfigError("iteration index must be non-negative")
        return min(1.0, self.a / (self.b + t) ** self.c)


class AssignmentState:
    """Relation assignments and per-document occupancy counts.

    z[d][i] is the relation of sentence i in document d (-1 while
    unassigned); occupancy[d, r] counts assigned sentences, so a fully
    assigned document satisfies occupancy[d].sum() == len(z[d]).
    """

    def __init__(self, sentence_counts, R):
        self.R = R
        self.z = [np.full(n, -1, dtype=np.int64) for n in sentence_counts]
        self.occupancy = np.zeros((len(sentence_counts), R), dtype=np.float64)

    @property
    def doc_totals(self):
        return self.occupancy.sum(axis=1)

    def assign(self, d, i, r):
        old = self.z[d][i]
        if old >= 0:
            self.occupancy[d, old] -= 1.0
            if self.occupancy[d, old] < 0:
                raise NumericalError(f"negative occupancy for document {d}, relation {old}")
        self.z[d][i] = r
        self.occupancy[d, r] += 1.0

    def unassign(self, d, i):
        old = self.z[d][i]
        if old >= 0:
            self.occupancy[d, old] -= 1.0
            if self.occupancy[d, old] < 0:
                raise NumericalError(f"negative occupancy for document {d}, relation {old}")
            self.z[d][i] = -1
        return old


class VariationalModel:
    """Sparse variational parameters plus hyperparameters for one run."""

    def __init__(self, R, feature_types, vocab_sizes, eta, alpha, vocab_hash="", metadata=None):
        if R < 1:
            raise ConfigError("R must be >= 1")
        self.R = R
        self.feature_types = tuple(feature_types)
        self.vocab_sizes = tuple(int(w) for w in vocab_sizes)
        self.eta = np.asarray(eta, dtype=np.float64).copy()
        if self.eta.shape != (len(self.feature_types),):
            raise ConfigError("eta must provide one value per feature type")
        if np.any(self.eta <= 0.0):
            raise ConfigError("eta must be positive")
        if alpha <= 0.0:
            raise ConfigError("alpha must be positive")
        self.alpha = float(alpha)
        self.vocab_hash = vocab_hash
        self.metadata = dict(metadata or {})
        self.pi = 1.0
        self.t = 0
        # cols[f][v] -> {r: scaled pseudocount}
        self.cols = [dict() for _ in self.feature_types]
        # row_scaled[f][r] = sum_v scaled[r, f, v]; row_nnz counts stored entries.
        self.row_scaled = [np.zeros(R, dtype=np.float64) for _ in self.feature_types]
        self.row_nnz = [np.zeros(R, dtype=np.int64) for _ in self.feature_types]

    @property
    def F(self):
        return len(self.feature_types)

    # -- materialization -------------------------------------------------

    def lambda_column(self, f, v):
        """Materialized lambda[:, f, v] over all relations."""
        col = np.full(self.R, self.eta[f])
        for r, s in self.cols[f].get(v, {}).items():
            col[r] += self.pi * s
        return col

    def lambda_value(self, r, f, v):
        s = self.cols[f].get(v, {}).get(r, 0.0)
        return self.pi * s + self.eta[f]

    def row_totals(self, f):
        """Lambda[:, f] = sum_v lambda[:, f, v], from the incremental sums."""
        return self.pi * self.row_scaled[f] + self.vocab_sizes[f] * self.eta[f]

    def dense_lambda(self, f):
        """Full (R, W_f) lambda matrix; test/evaluation scale only."""
        lam = np.full((self.R, self.vocab_sizes[f]), self.eta[f])
        for v, col in self.cols[f].items():
            for r, s in col.items():
                lam[r, v] += self.pi * s
        return lam

    def beta_mean(self, f):
        """Posterior-mean point estimate lambda / Lambda for one type."""
        return self.dense_lambda(f) / self.row_totals(f)[:, None]

    # -- bookkeeping ------------------------------------------------------

    def add_scaled(self, f, v, r, delta):
        col = self.cols[f].setdefault(v, {})
        if r in col:
            col[r] += delta
        else:
            col[r] = delta
            self.row_nnz[f][r] += 1
        self.row_scaled[f][r] += delta

    def decay(self, rho):
        """Apply the (1 - rho) shrink to every entry by rescaling pi."""
        self.pi *= 1.0 - rho
        if not (self.pi > 0.0):
            raise NumericalError("pi underflowed to zero; learning rate reached 1")

    def renormalize(self):
        """Fold pi into the stored entries (exact up to rounding)."""
        if self.pi >= PI_RENORM_FLOOR:
            return
        for f in range(self.F):
            for col in self.cols[f].values():
                for r in col:
                    col[r] *= self.pi
            self.row_scaled[f] *= self.pi
        self.pi = 1.0

    def prune(self):
        """Drop entries whose materialized mass fell below the floor."""
        for f in range(self.F):
            threshold = PRUNE_FACTOR * self.eta[f] / self.pi
            cols = self.cols[f]
            for v in list(cols):
                col = cols[v]
                for r in [r for r, s in col.items() if s < threshold]:
                    self.row_scaled[f][r] -= col[r]
                    self.row_nnz[f][r] -= 1
                    del col[r]
                if not col:
                    del cols[v]

    def check_invariants(self):
        if not (self.pi > 0.0 and self.pi <= 1.0):
            raise NumericalError(f"pi out of range: {self.pi}")
        if np.any(self.eta <= 0.0) or self.alpha <= 0.0:
            raise NumericalError("hyperparameters must stay positive")

    def check_row_totals(self, rel_tol=1e-8):
        """Recompute Lambda from stored entries and compare (lazy check)."""
        for f in range(self.F):
            fresh = np.zeros(self.R)
            for col in self.cols[f].values():
                for r, s in col.items():
                    fresh[r] += s
            expected = self.pi * fresh + self.vocab_sizes[f] * self.eta[f]
            got = self.row_totals(f)
            err = np.max(np.abs(got - expected) / np.maximum(np.abs(expected), 1e-300))
            if err > rel_tol:
                raise NumericalError(f"row totals drifted by {err:.3e} for feature type {f}")

    # -- persistence ------------------------------------------------------

    def to_json_obj(self):
        lam = []
        for r in range(self.R):
            per_f = []
            for f in range(self.F):
                entries = {}
                vs = sorted(v for v, col in self.cols[f].items() if r in col)
                for v in vs:
                    entries[str(v)] = self.pi * self.cols[f][v][r] + self.eta[f]
                per_f.append(entries)
            lam.append(per_f)
        return {
            "format": MODEL_FORMAT,
            "R": self.R,
            "F": self.F,
            "feature_types": list(self.feature_types),
            "vocab_sizes": list(self.vocab_sizes),
            "eta": [float(e) for e in self.eta],
            "alpha": self.alpha,
            "t": self.t,
            "pi": self.pi,
            "vocab_hash": self.vocab_hash,
            "metadata": self.metadata,
            "lambda": lam,
        }

    def save(self, path):
        atomic_write_text(path, json.dumps(self.to_json_obj(), ensure_ascii=False, indent=1) + "\n")
        return path

    @classmethod
    def from_json_obj(cls, obj):
        if obj.get("format") != MODEL_FORMAT:
            raise DataError(f"unsupported model format {obj.get('format')!r}")
        model = cls(
            R=obj["R"],
            feature_types=obj["feature_types"],
            vocab_sizes=obj["vocab_sizes"],
            eta=obj["eta"],
            alpha=obj["alpha"],
            vocab_hash=obj.get("vocab_hash", ""),
            metadata=obj.get("metadata"),
        )
        model.t = int(obj["t"])
        model.pi = float(obj["pi"])
        if not (0.0 < model.pi <= 1.0):
            raise DataError("model pi out of range")
        for r, per_f in enumerate(obj["lambda"]):
            if len(per_f) != model.F:
                raise DataError("lambda table does not match F")
            for f, entries in enumerate(per_f):
                for v_str, lam in entries.items():
                    v = int(v_str)
                    if not (0 <= v < model.vocab_sizes[f]):
                        raise DataError(f"lambda value id {v} out of range for type {f}")
                    scaled = (float(lam) - model.eta[f]) / model.pi
                    if scaled < 0.0:
                        raise DataError("stored lambda below eta floor")
                    model.add_scaled(f, v, r, scaled)
        return model

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed model file ({exc.msg})") from exc
        return cls.from_json_obj(obj)


def init_model(corpus, R, eta0, alpha0, seed, metadata=None):
    """Random symmetry-breaking initialization.

    Each entry starts at eta_f plus Gamma(100, mean 1) noise scaled so the
    total initial pseudocount mass per feature type is comparable to the
    corpus token count; the noise washes out under the (1 - rho) decay.
    """
    from .corpus import corpus_stats  # local import avoids a cycle

    stats = corpus_stats(corpus)
    eta = np.full(corpus.F, eta0, dtype=np.float64) if np.isscalar(eta0) else np.asarray(eta0, dtype=np.float64)
    model = VariationalModel(
        R=R,
        feature_types=corpus.feature_types,
        vocab_sizes=corpus.vocab.sizes,
        eta=eta,
        alpha=alpha0,
        vocab_hash=corpus.vocab.content_hash(),
        metadata=metadata,
    )
    rng = child_rng(seed, "init")
    for f in range(model.F):
        W = model.vocab_sizes[f]
        if W == 0:
            continue
        scale = stats.total_tokens / (R * W)
        noise = rng.gamma(shape=100.0, scale=0.01, size=(R, W)) * scale
        for v in range(W):
            col = {r: noise[r, v] for r in range(R)}
            model.cols[f][v] = col
        for r in range(R):
            model.row_scaled[f][r] = noise[r].sum()
            model.row_nnz[f][r] = W
    return model
