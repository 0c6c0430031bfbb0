"""Special functions and seeded randomness used by every trainer.

The polygamma functions are evaluated by upward recurrence into the
asymptotic regime followed by the de Moivre / Bernoulli tail series; the
log-gamma function uses the Lanczos approximation (g=7, 9 terms).  All three
accept scalars or numpy arrays and are accurate to well under 1e-10 over
[1e-3, 1e6], which keeps the package free of heavyweight runtime
dependencies.  The test suite checks them against scipy.
"""

import hashlib

import numpy as np

from .errors import NumericalError

__all__ = [
    "digamma",
    "trigamma",
    "log_gamma",
    "categorical_sample",
    "make_rng",
    "child_rng",
]

_SHIFT_THRESHOLD = 6.0

# Bernoulli-number coefficients of the digamma tail series in u = 1/x^2.
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    1.0 / 120.0,
    1.0 / 252.0,
    1.0 / 240.0,
    1.0 / 132.0,
    691.0 / 32760.0,
    1.0 / 12.0,
)

# Coefficients of the trigamma tail series (also in u = 1/x^2).
_TRIGAMMA_TAIL = (
    1.0 / 6.0,
    1.0 / 30.0,
    1.0 / 42.0,
    1.0 / 30.0,
    5.0 / 66.0,
    691.0 / 2730.0,
    7.0 / 6.0,
)

_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _as_positive_array(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0.0)):
        raise NumericalError(f"{name} requires finite positive arguments")
    return arr


def digamma(x):
    """Digamma function psi(x) = d/dx log Gamma(x), for x > 0.

    Scalar in, float out; array in, array out.  Raises NumericalError for
    any argument <= 0 or non-finite.
    """
    arr = _as_positive_array(x, "digamma")
    scalar = arr.ndim == 0
    z = np.atleast_1d(arr).astype(np.float64, copy=True)
    acc = np.zeros_like(z)
    mask = z < _SHIFT_THRESHOLD
    while mask.any():
        acc[mask] -= 1.0 / z[mask]
        z[mask] += 1.0
        mask = z < _SHIFT_THRESHOLD
    u = 1.0 / (z * z)
    tail = np.zeros_like(z)
    for c in reversed(_DIGAMMA_TAIL):
        tail = u * (c - tail)
    out = acc + np.log(z) - 0.5 / z - tail
    return float(out[0]) if scalar else out


def trigamma(x):
    """Trigamma function psi_1(x) = d/dx psi(x), for x > 0."""
    arr = _as_positive_array(x, "trigamma")
    scalar = arr.ndim == 0
    z = np.atleast_1d(arr).astype(np.float64, copy=True)
    acc = np.zeros_like(z)
    mask = z < _SHIFT_THRESHOLD
    while mask.any():
        acc[mask] += 1.0 / (z[mask] * z[mask])
        z[mask] += 1.0
        mask = z < _SHIFT_THRESHOLD
    u = 1.0 / (z * z)
    tail = np.zeros_like(z)
    for c in reversed(_TRIGAMMA_TAIL):
        tail = u * (c - tail)
    out = acc + 1.0 / z + 0.5 * u + tail / z
    return float(out[0]) if scalar else out


def log_gamma(x):
    """log Gamma(x) for x > 0, via the Lanczos approximation."""
    arr = _as_positive_array(x, "log_gamma")
    scalar = arr.ndim == 0
    z = np.atleast_1d(arr).astype(np.float64, copy=True)
    out = np.empty_like(z)

    small = z < 0.5
    if small.any():
        # Reflection keeps the Lanczos argument away from the 0+ pole.
        zs = z[small]
        out[small] = np.log(np.pi / np.sin(np.pi * zs)) - _lanczos(1.0 - zs)
    out[~small] = _lanczos(z[~small])
    return float(out[0]) if scalar else out


def _lanczos(z):
    # Valid for z >= 0.5; callers handle reflection.
    w = z - 1.0
    s = np.full_like(w, _LANCZOS_COEFFS[0])
    for k, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        s += c / (w + k)
    t = w + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(s)


def make_rng(seed):
    """Root deterministic generator for a run."""
    return np.random.default_rng(seed)


def child_rng(root_seed, *key):
    """Derive an independent child stream keyed by (root_seed, *key).

    The key may mix integers and strings (for example an iteration number
    and a document id).  Derivation goes through a blake2b digest of the
    canonical key encoding, so child streams do not depend on worker
    scheduling or platform hash randomization.
    """
    parts = [f"i:{root_seed}"]
    for k in key:
        if isinstance(k, (int, np.integer)):
            parts.append(f"i:{int(k)}")
        else:
            parts.append(f"s:{k}")
    digest = hashlib.blake2b("|".join(parts).encode("utf-8"), digest_size=32)
    entropy = int.from_bytes(digest.digest(), "big")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def categorical_sample(rng, unnormalized_weights):
    """Draw an index i with probability w_i / sum(w).

    Weights must be finite and non-negative with at least one positive
    entry; anything else raises NumericalError.
    """
    w = np.asarray(unnormalized_weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise NumericalError("categorical_sample needs a non-empty weight vector")
    if not np.all(np.isfinite(w)):
        raise NumericalError("categorical_sample: non-finite weight")
    if np.any(w < 0.0):
        raise NumericalError("categorical_sample: negative weight")
    cum = np.cumsum(w)
    total = cum[-1]
    if not total > 0.0:
        raise NumericalError("categorical_sample: no positive weight")
    u = rng.random() * total
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, w.size - 1)
