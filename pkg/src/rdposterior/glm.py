"""Posterior sampling for bounded-feature GLMs with Gaussian priors.

The posterior is p(w | D) proportional to exp(-n*beta*||w||^2 / 2) times the
product of per-example likelihoods, optionally raised to a temper exponent
rho in (0, 1].  Privacy knobs: the concentrated mechanism raises the prior
precision scale beta to 2*c^2*B^2*lam / (n*eps); the diffused mechanism
tempers with rho = min(1, sqrt(eps*n*beta / (2*c^2*B^2*lam))).  Sampling is
coordinate-wise slice sampling with stepping-out and shrinkage.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr

from .mechanisms import RngStream

__all__ = [
    "GlmSpec",
    "binary_spec",
    "GlmPosterior",
    "SamplerConfig",
    "WeightSample",
    "log_posterior_density",
    "log_posterior_grad",
    "direct_rdp_budget",
    "concentrated_glm",
    "diffuse_glm",
    "ops_sample",
    "slice_sample",
]

LINKS = ("logistic", "probit", "cloglog")

NORM_SLACK = 1e-9


@dataclass(frozen=True)
class GlmSpec:
    """Likelihood bounds: feature norms <= c, labels and inverse link bounded.

    B = max(|y_min - gamma_max|, |y_max - gamma_min|) caps the per-example
    score norm at c*B.  For the three binary links the inverse link has range
    (0, 1) so B = 1.
    """

    link: str
    c: float
    y_min: float = 0.0
    y_max: float = 1.0
    gamma_min: float = 0.0
    gamma_max: float = 1.0

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}, got {self.link!r}")
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise ValueError(f"c must be positive, got {self.c!r}")
        if self.y_min > self.y_max:
            raise ValueError("empty label range")

    @property
    def B(self):
        return max(abs(self.y_min - self.gamma_max), abs(self.y_max - self.gamma_min))


def binary_spec(link="logistic", c=1.0):
    """Spec for 0/1 labels under any of the three binary links (B = 1)."""
    return GlmSpec(link=link, c=c)


def inv_link(link, t):
    t = np.asarray(t, dtype=float)
    if link == "logistic":
        out = np.empty_like(t)
        pos = t >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
        e = np.exp(t[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    if link == "probit":
        return ndtr(t)
    if link == "cloglog":
        return -np.expm1(-np.exp(t))
    raise ValueError(f"unknown link {link!r}")


def _loglik_terms(link, t, y):
    """log p(y | t) per example for binary y, numerically stabilized."""
    if link == "logistic":
        sign = np.where(y > 0.5, 1.0, -1.0)
        return -np.logaddexp(0.0, -sign * t)
    if link == "probit":
        return np.where(y > 0.5, log_ndtr(t), log_ndtr(-t))
    if link == "cloglog":
        et = np.exp(t)
        # y=1: log(1 - exp(-e^t)); y=0: -e^t
        with np.errstate(divide="ignore"):
            log_p1 = np.log(-np.expm1(-et))
        return np.where(y > 0.5, log_p1, -et)
    raise ValueError(f"unknown link {link!r}")


def _dloglik_terms(link, t, y):
    """d/dt log p(y | t) per example."""
    if link == "logistic":
        return y - inv_link("logistic", t)
    if link == "probit":
        log_phi = -0.5 * t * t - 0.5 * math.log(2.0 * math.pi)
        ratio_pos = np.exp(log_phi - log_ndtr(t))
        ratio_neg = np.exp(log_phi - log_ndtr(-t))
        return np.where(y > 0.5, ratio_pos, -ratio_neg)
    if link == "cloglog":
        et = np.exp(t)
        with np.errstate(divide="ignore"):
            log_p1 = np.log(-np.expm1(-et))
        d1 = np.exp(t - et - log_p1)
        return np.where(y > 0.5, d1, -et)
    raise ValueError(f"unknown link {link!r}")


class GlmPosterior:
    """An (optionally tempered) posterior over weights for a validated dataset."""

    def __init__(self, spec, features, labels, beta, temper_rho=1.0):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=float)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise ValueError("features must be (n, d) with matching labels (n,)")
        norms = np.linalg.norm(features, axis=1)
        if np.any(norms > spec.c + NORM_SLACK):
            worst = float(norms.max())
            raise ValueError(f"feature norm {worst} exceeds bound c={spec.c}")
        if np.any((labels < spec.y_min) | (labels > spec.y_max)):
            raise ValueError("labels outside the declared range")
        if not np.all(np.isin(labels, (0.0, 1.0))):
            raise ValueError("binary links require 0/1 labels")
        if not (math.isfinite(beta) and beta > 0.0):
            raise ValueError(f"beta must be positive, got {beta!r}")
        if not 0.0 < temper_rho <= 1.0:
            raise ValueError(f"temper_rho must lie in (0, 1], got {temper_rho!r}")
        self.spec = spec
        self.features = features
        self.labels = labels
        self.beta = float(beta)
        self.temper_rho = float(temper_rho)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


def log_posterior_density(post, w):
    """Unnormalized log density: -n*beta*||w||^2/2 + rho * sum log p(y|w,x)."""
    w = np.asarray(w, dtype=float)
    t = post.features @ w
    ll = float(_loglik_terms(post.spec.link, t, post.labels).sum())
    return -0.5 * post.n * post.beta * float(w @ w) + post.temper_rho * ll


def log_posterior_grad(post, w):
    w = np.asarray(w, dtype=float)
    t = post.features @ w
    dl = _dloglik_terms(post.spec.link, t, post.labels)
    return -post.n * post.beta * w + post.temper_rho * (dl @ post.features)


def direct_rdp_budget(spec, n, beta, lam):
    """Order-lam level of direct posterior sampling: 2*c^2*B^2*lam / (n*beta)."""
    if n <= 0 or beta <= 0 or lam <= 0:
        raise ValueError("n, beta and lam must be positive")
    return 2.0 * spec.c**2 * spec.B**2 * lam / (n * beta)


@dataclass(frozen=True)
class SamplerConfig:
    burn_in: int = 1000
    thinning: int = 1
    width: float = 1.0
    max_step_out: int = 50

    def __post_init__(self):
        if self.burn_in < 0 or self.thinning < 1 or self.width <= 0 or self.max_step_out < 0:
            raise ValueError(f"invalid sampler configuration {self!r}")


@dataclass(frozen=True)
class WeightSample:
    w: np.ndarray
    chain_meta: dict = field(default_factory=dict)

    def to_json(self):
        return {"w": [float(v) for v in self.w], "chain_meta": dict(self.chain_meta)}


def slice_sample(log_density, init, burn_in, n_samples, rng, width=1.0,
                 max_step_out=50, thinning=1):
    """Coordinate-wise slice sampling with stepping-out and shrinkage.

    Returns an (n_samples, d) array of post-burn-in states.  The density must
    be finite at the initial point; -inf values elsewhere act as hard support
    constraints (intervals shrink back inside).
    """
    x = np.array(init, dtype=float).ravel().copy()
    d = x.size
    logp = log_density(x)
    if not math.isfinite(logp):
        raise ValueError(f"log density must be finite at the initial point, got {logp!r}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    out = np.empty((n_samples, d))
    kept = 0
    total = burn_in + n_samples * thinning
    for step in range(total):
        for dd in range(d):
            x0 = x[dd]
            log_u = logp + math.log(gen.random())
            u = gen.random()
            left = x0 - u * width
            right = x0 + (1.0 - u) * width

            def at(v):
                x[dd] = v
                return log_density(x)

            steps = 0
            while steps < max_step_out and at(left) > log_u:
                left -= width
                steps += 1
            steps = 0
            while steps < max_step_out and at(right) > log_u:
                right += width
                steps += 1
            while True:
                prop = left + gen.random() * (right - left)
                lp = at(prop)
                if lp > log_u:
                    logp = lp
                    break
                if prop > x0:
                    right = prop
                elif prop < x0:
                    left = prop
                else:
                    raise RuntimeError("slice interval collapsed to the current point")
            # x[dd] already holds prop via at()
        if step >= burn_in and (step - burn_in) % thinning == 0:
            out[kept] = x
            kept += 1
    return out


def _one_sample(post, cfg, rng, meta):
    chain = slice_sample(
        lambda w: log_posterior_density(post, w),
        np.zeros(post.d),
        cfg.burn_in,
        1,
        rng,
        width=cfg.width,
        max_step_out=cfg.max_step_out,
        thinning=cfg.thinning,
    )
    meta = dict(meta)
    meta.update(burn_in=cfg.burn_in, thinning=cfg.thinning, seed=rng.seed)
    return WeightSample(chain[-1], meta)


def concentrated_glm(spec, features, labels, beta0, budget, cfg, rng):
    """Raise the prior precision scale to meet the budget, then sample.

    beta = max(2*c^2*B^2*lam / (n*eps), beta0); the posterior is untempered.
    """
    n = np.asarray(features).shape[0]
    beta = max(2.0 * spec.c**2 * spec.B**2 * budget.lam / (n * budget.epsilon), beta0)
    post = GlmPosterior(spec, features, labels, beta=beta, temper_rho=1.0)
    return _one_sample(post, cfg, rng, {"mechanism": "concentrated", "beta": beta})


def diffuse_glm(spec, features, labels, beta, budget, cfg, rng):
    """Temper the likelihood to meet the budget, then sample.

    rho = min(1, sqrt(eps*n*beta / (2*c^2*B^2*lam))); the prior stays put.
    """
    n = np.asarray(features).shape[0]
    rho = min(1.0, math.sqrt(budget.epsilon * n * beta / (2.0 * spec.c**2 * spec.B**2 * budget.lam)))
    post = GlmPosterior(spec, features, labels, beta=beta, temper_rho=rho)
    return _one_sample(post, cfg, rng, {"mechanism": "diffused", "rho": rho})


def ops_sample(spec, features, labels, beta, epsilon_pure, cfg, rng):
    """One-posterior-sample baseline: tempered posterior on a truncated prior.

    The temper exponent rho = min(1, epsilon_pure * beta / (4*c^2)) inverts
    the baseline's pure-DP level 4*c^2*rho / beta; support is the L2 ball of
    radius c / beta, the smallest data-independent ball containing the MAP.
    """
    if not (math.isfinite(epsilon_pure) and epsilon_pure > 0.0):
        raise ValueError(f"epsilon_pure must be positive, got {epsilon_pure!r}")
    rho = min(1.0, epsilon_pure * beta / (4.0 * spec.c**2))
    post = GlmPosterior(spec, features, labels, beta=beta, temper_rho=rho)
    radius = spec.c / beta

    def log_density(w):
        if float(w @ w) > radius * radius:
            return -math.inf
        return log_posterior_density(post, w)

    chain = slice_sample(
        log_density,
        np.zeros(post.d),
        cfg.burn_in,
        1,
        rng,
        width=cfg.width,
        max_step_out=cfg.max_step_out,
        thinning=cfg.thinning,
    )
    meta = {
        "mechanism": "ops",
        "rho": rho,
        "radius": radius,
        "burn_in": cfg.burn_in,
        "thinning": cfg.thinning,
        "seed": rng.seed,
    }
    return WeightSample(chain[-1], meta)
