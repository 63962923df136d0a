"""Utility metrics for the experiment harness.

The closed-form Beta KL serves the calibrated mechanisms (their release
distribution is a single Beta); the additive-noise baseline releases a
continuous mixture of Betas, so its KL against the true posterior is
evaluated by fixed-node Gauss-Legendre quadrature, outer integral in the
mean-parameter space rho in (0, 1) and inner integral over the noisy
statistic.  Every quadrature result is cross-checked at doubled resolution.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, ndtr

from .glm import _loglik_terms, inv_link
from .specfun import digamma, ln_gamma

__all__ = [
    "QuadratureConfig",
    "QuadratureAccuracyError",
    "kl_beta",
    "kl_gaussian_mechanism",
    "heldout_loglik",
    "glm_test_metrics",
]


@dataclass(frozen=True)
class QuadratureConfig:
    n_nodes_outer: int = 160
    n_nodes_inner: int = 160
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.n_nodes_outer < 32 or self.n_nodes_inner < 32:
            raise ValueError("node counts must be >= 32")
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")


class QuadratureAccuracyError(RuntimeError):
    """Doubling the node counts moved the estimate by more than the tolerance."""

    def __init__(self, estimate, change, tolerance):
        super().__init__(
            f"quadrature not converged: doubling nodes changed the estimate by "
            f"{change!r} (> {tolerance!r}); achieved estimate {estimate!r}"
        )
        self.estimate = estimate
        self.change = change
        self.tolerance = tolerance


def _shapes(eta):
    a, b = float(eta[0]), float(eta[1])
    if a <= 0.0 or b - a <= 0.0:
        raise ValueError(f"parameter {eta!r} is not a normalizable Beta parameter")
    return a, b - a


def _ln_beta(a, b):
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def kl_beta(eta_p, eta_q):
    """KL(Beta_P || Beta_Q) in closed form from log-Beta and digamma."""
    a1, b1 = _shapes(eta_p)
    a2, b2 = _shapes(eta_q)
    return (
        _ln_beta(a2, b2)
        - _ln_beta(a1, b1)
        + (a1 - a2) * digamma(a1)
        + (b1 - b2) * digamma(b1)
        + (a2 - a1 + b2 - b1) * digamma(a1 + b1)
    )


def _beta_logpdf(rho, alpha, beta):
    return (
        (alpha - 1.0) * np.log(rho)
        + (beta - 1.0) * np.log1p(-rho)
        - (gammaln(alpha) + gammaln(beta) - gammaln(alpha + beta))
    )


def _gauss_nodes(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


# Noise mass beyond this many sigmas is dropped from the inner integral.
_NOISE_WINDOW_SIGMAS = 8.0


def _kl_gauss_at(a0, b0, s, n, sigma, n_outer, n_inner):
    rho, w_rho = _gauss_nodes(n_outer, 0.0, 1.0)
    ln_p = _beta_logpdf(rho, a0 + s, b0 + n - (a0 + s))

    lo = max(0.0, s - _NOISE_WINDOW_SIGMAS * sigma)
    hi = min(n, s + _NOISE_WINDOW_SIGMAS * sigma)
    st, w_st = _gauss_nodes(n_inner, lo, hi)
    dens = np.exp(-0.5 * ((st - s) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
    weights = np.concatenate([w_st * dens, [ndtr(-s / sigma), ndtr((s - n) / sigma)]])
    s_mix = np.concatenate([st, [0.0, n]])

    alpha = a0 + s_mix
    beta = (b0 + n) - alpha
    # (outer, mixture-component) grid of Beta log densities
    ln_comp = _beta_logpdf(rho[:, None], alpha[None, :], beta[None, :])
    with np.errstate(divide="ignore"):
        ln_a = logsumexp(ln_comp, axis=1, b=weights[None, :])
    p = np.exp(ln_p)
    integrand = np.where(p > 0.0, p * (ln_p - ln_a), 0.0)
    return max(float(w_rho @ integrand), 0.0)


def kl_gaussian_mechanism(eta0, data, sigma, cfg=QuadratureConfig()):
    """KL(true posterior || noisy-statistic mechanism) for the Beta system.

    The mechanism adds N(0, sigma^2) to the summed statistic and projects
    onto [0, n]; its output law over the mean parameter is the induced
    mixture of Betas, with the projection mass sitting in two boundary
    components.  Raises QuadratureAccuracyError when doubling node counts
    moves the estimate by more than cfg.tolerance.
    """
    a0, b0 = float(eta0[0]), float(eta0[1])
    if a0 <= 0.0 or b0 - a0 <= 0.0:
        raise ValueError(f"prior {eta0!r} is not a normalizable Beta parameter")
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    vals = [float(v) for v in data]
    if any(not 0.0 <= v <= 1.0 for v in vals):
        raise ValueError("data values must lie in [0, 1]")
    s, n = sum(vals), float(len(vals))
    coarse = _kl_gauss_at(a0, b0, s, n, sigma, cfg.n_nodes_outer, cfg.n_nodes_inner)
    fine = _kl_gauss_at(a0, b0, s, n, sigma, 2 * cfg.n_nodes_outer, 2 * cfg.n_nodes_inner)
    change = abs(fine - coarse)
    if change > cfg.tolerance:
        raise QuadratureAccuracyError(fine, change, cfg.tolerance)
    return fine


def heldout_loglik(theta, heldout_bits):
    """sum_i [x_i * theta - ln(1 + e^theta)] over held-out bits."""
    theta = float(theta)
    bits = [float(b) for b in heldout_bits]
    if any(b not in (0.0, 1.0) for b in bits):
        raise ValueError("held-out data must be 0/1 bits")
    softplus = math.log1p(math.exp(-abs(theta))) + max(theta, 0.0)
    return sum(bits) * theta - len(bits) * softplus


def glm_test_metrics(w, spec, features, labels):
    """Error rate and negative log-likelihood of weights on a test set.

    Predicts 1 when the inverse link reaches 1/2 (ties resolve to 1).
    """
    w = np.asarray(getattr(w, "w", w), dtype=float)
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    t = features @ w
    pred = (inv_link(spec.link, t) >= 0.5).astype(float)
    error_rate = float(np.mean(pred != labels))
    neg_loglik = -float(_loglik_terms(spec.link, t, labels).sum())
    return {"error_rate": error_rate, "neg_loglik": neg_loglik}
