"""Natural-gradient updates for the Dirichlet hyperparameters eta_f and alpha.

Both parameters are stepped once per SSVI iteration (after the lambda
update, with the same rho) by

    param += rho * gradient / fisher,   then clamped to >= floor.

The eta gradient is exact given the current lambda; the alpha gradient is a
Monte Carlo estimate from the iteration's chain occupancy snapshots.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .numerics import digamma, log_gamma, trigamma

log = logging.getLogger(__name__)


@dataclass
class HyperOptConfig:
    optimize_eta: bool = True
    optimize_alpha: bool = True
    floor: float = 1e-5
    schedule: object = None  # optional separate LearningSchedule; None shares rho_t

    def __post_init__(self):
        if not (self.floor > 0.0):
            raise ConfigError("hyperparameter floor must be positive")


def eta_gradient(model, f):
    """d(ELBO)/d(eta_f) at the current lambda.

        sum_r [ sum_v (psi(lambda_rfv) - psi(eta_f))
                - W_f * (psi(Lambda_rf) - psi(W_f * eta_f)) ]

    Untouched entries have lambda == eta exactly, so only stored entries
    contribute to the first sum.
    """
    eta = float(model.eta[f])
    W = model.vocab_sizes[f]
    if W == 0:
        return 0.0
    psi_eta = digamma(eta)
    total = 0.0
    lam = [model.pi * s + eta for col in model.cols[f].values() for s in col.values()]
    if lam:
        total += float(np.sum(digamma(np.array(lam)) - psi_eta))
    totals = model.row_totals(f)
    total -= W * float(np.sum(digamma(totals) - digamma(W * eta)))
    return total


def eta_fisher(model, f):
    """Fisher information R * W_f * (psi1(eta_f) - W_f * psi1(W_f * eta_f))."""
    eta = float(model.eta[f])
    W = model.vocab_sizes[f]
    if W < 2:
        return 0.0
    value = model.R * W * (trigamma(eta) - W * trigamma(W * eta))
    if not (value > 0.0):
        raise NumericalError(f"eta Fisher information non-positive for feature type {f}: {value}")
    return value


def alpha_gradient(occupancy_snapshots, alpha, R, D, S, S_prime):
    """Monte Carlo gradient of the ELBO in alpha.

    occupancy_snapshots: one (S', R) array per minibatch document.  Each
    sampled state z_d contributes

        sum_r (psi(O_dr + alpha) - psi(alpha)) + R * (psi(R alpha) - psi(O_d + R alpha))

    and the estimate is (D / S) * sum_d mean_s' of that.
    """
    psi_alpha = digamma(alpha)
    psi_ralpha = digamma(R * alpha)
    total = 0.0
    for occ in occupancy_snapshots:
        occ = np.asarray(occ, dtype=np.float64)
        od = occ.sum(axis=1)
        per_state = (
            digamma(occ + alpha).sum(axis=1)
            - R * psi_alpha
            + R * (psi_ralpha - digamma(od + R * alpha))
        )
        total += float(per_state.mean())
    return (D / S) * total


def alpha_fisher(alpha, R, D):
    """Fisher information D * R * (psi1(alpha) - R * psi1(R alpha)); 0 when R = 1."""
    if R < 2:
        return 0.0
    value = D * R * (trigamma(alpha) - R * trigamma(R * alpha))
    if not (value > 0.0):
        raise NumericalError(f"alpha Fisher information non-positive: {value}")
    return value


def eta_objective_slice(lam, eta):
    """The eta_f-dependent part of the ELBO at a fixed dense lambda (R, W).

        eta * sum_{r,v} (psi(lambda) - psi(Lambda))
        - R * (W * logGamma(eta) - logGamma(W * eta))

    Used by finite-difference checks of eta_gradient.
    """
    lam = np.asarray(lam, dtype=np.float64)
    R, W = lam.shape
    totals = lam.sum(axis=1)
    psi_part = float(np.sum(digamma(lam) - digamma(totals)[:, None]))
    return eta * psi_part - R * (W * log_gamma(eta) - log_gamma(W * eta))


def eta_log_partition(eta, R, W):
    """a(eta) = R * (W * logGamma(eta) - logGamma(W * eta)); a'' is the Fisher."""
    return R * (W * log_gamma(eta) - log_gamma(W * eta))


def alpha_log_partition(alpha, R, D):
    """Per-corpus normalizer D * (R * logGamma(alpha) - logGamma(R * alpha))."""
    return D * (R * log_gamma(alpha) - log_gamma(R * alpha))


def hyper_step(model, diag, D, S, rho, config):
    """Apply one natural-gradient step to eta and alpha (in place).

    Returns the metrics columns (current values and the gradients used).
    Non-finite proposals are skipped with a warning rather than aborting the
    run; all accepted values are clamped to config.floor.  Row totals need no
    refresh: they are derived from eta on demand.
    """
    if config.schedule is not None:
        rho = min(config.schedule.rate(model.t - 1), 1.0 - 1e-6)
    out = {}
    if config.optimize_eta:
        for f, name in enumerate(model.feature_types):
            g = eta_gradient(model, f)
            fisher = eta_fisher(model, f)
            out[f"eta_grad_{name}"] = g
            if fisher > 0.0:
                proposal = model.eta[f] + rho * g / fisher
                if np.isfinite(proposal):
                    model.eta[f] = max(proposal, config.floor)
                else:
                    log.warning("skipping non-finite eta update for feature type %s", name)
    if config.optimize_alpha:
        snapshots = diag.occupancy_snapshots
        s_prime = snapshots[0].shape[0] if snapshots else 0
        g = alpha_gradient(snapshots, model.alpha, model.R, D, S, s_prime)
        fisher = alpha_fisher(model.alpha, model.R, D)
        out["alpha_grad"] = g
        if fisher > 0.0:
            proposal = model.alpha + rho * g / fisher
            if np.isfinite(proposal):
                model.alpha = max(proposal, config.floor)
            else:
                log.warning("skipping non-finite alpha update")
    for f, name in enumerate(model.feature_types):
        out[f"eta_{name}"] = float(model.eta[f])
    out["alpha"] = model.alpha
    return out
