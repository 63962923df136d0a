"""Conjugate exponential-family systems and their order-lambda divergences.

A system's conjugate prior/posterior family has densities
``p(theta | eta) = exp(T(theta) . eta - C(eta))`` over the natural parameter
``theta``.  Parameters ``eta`` are plain float vectors of length ``dim + 1``:
a sufficient-statistic block followed by a pseudo-observation count.
Observing data updates ``eta' = eta + sum_i (S(x_i), 1)``.

For two members P, Q of the same family the order-lambda divergence has the
closed form

    D_lambda(P || Q) = [C(lam*eta_P + (1-lam)*eta_Q) - lam*C(eta_P)] / (lam-1)
                       + C(eta_Q)

which is +inf exactly when the blended parameter leaves the normalizable set.
Non-normalizability is reported through a +inf log-partition sentinel rather
than an exception so suprema propagate it.
"""

import math
from dataclasses import dataclass

import numpy as np

from .specfun import ln_gamma

__all__ = [
    "PrivacyBudget",
    "ExpFamSystem",
    "BetaBernoulli",
    "DirichletCategorical",
    "GaussianMean",
    "system_from_json",
    "as_param",
    "log_partition",
    "posterior_update",
    "renyi_divergence",
    "sup_neighbor_divergence",
    "lambda_star",
    "fold_public_data",
]


@dataclass(frozen=True)
class PrivacyBudget:
    """An order/level pair (lam, epsilon); orders below 1 are unsupported.

    Divergence evaluation needs lam strictly above 1; the GLM budget
    formulas are valid down to lam = 1, so that boundary is allowed here
    and rejected where it cannot be used.
    """

    lam: float
    epsilon: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 1.0):
            raise ValueError(f"order lam must be finite and >= 1, got {self.lam!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValueError(f"epsilon must be finite and > 0, got {self.epsilon!r}")


def as_param(coords, length=None):
    """Coerce coords to a 1-d float vector, optionally checking its length."""
    eta = np.asarray(coords, dtype=float)
    if eta.ndim != 1:
        raise ValueError(f"parameter must be a 1-d vector, got shape {eta.shape}")
    if not np.all(np.isfinite(eta)):
        raise ValueError(f"parameter has non-finite entries: {eta!r}")
    if length is not None and eta.size != length:
        raise ValueError(f"parameter length {eta.size} != expected {length}")
    return eta


class ExpFamSystem:
    """Base class: a conjugate model with bounded sufficient statistics."""

    dim = None    # sufficient-statistic dimension
    delta = None  # diameter bound sup ||S(x) - S(y)||

    @property
    def param_len(self):
        return self.dim + 1

    def check_param(self, eta):
        return as_param(eta, self.param_len)

    def log_partition(self, eta):
        """C(eta); +inf when eta is not normalizable."""
        raise NotImplementedError

    def normalizable(self, eta):
        return math.isfinite(self.log_partition(eta))

    def suff_stat(self, x):
        """S(x) as a length-``dim`` vector; validates the observation."""
        raise NotImplementedError

    def stat_extremes(self):
        """Extreme points of the sufficient-statistic range.

        Vertices of the reachable posterior set are ``eta0 + n*(s, 1)`` for
        extreme s; extreme neighbor directions are ordered differences of
        extreme statistics.
        """
        raise NotImplementedError

    def sample_theta(self, eta, rng):
        """One draw of theta from p(theta | eta), given a numpy Generator."""
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


class BetaBernoulli(ExpFamSystem):
    """Bernoulli likelihood in log-odds form with its conjugate Beta prior.

    eta = (a, b) corresponds to the Beta(a, b - a) distribution over the
    success probability; ``b`` carries the total pseudo-count.  Sufficient
    statistics are allowed to range over all of [0, 1], which covers both
    plain bits and the statistical-query extension; the diameter stays 1.
    """

    dim = 1
    delta = 1.0

    def log_partition(self, eta):
        a, b = self.check_param(eta)
        if a <= 0.0 or b - a <= 0.0:
            return math.inf
        return ln_gamma(a) + ln_gamma(b - a) - ln_gamma(b)

    def suff_stat(self, x):
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"observation must lie in [0, 1], got {x!r}")
        return np.array([x])

    def stat_extremes(self):
        return [np.array([0.0]), np.array([1.0])]

    def shape_params(self, eta):
        """(alpha, beta) shape pair implied by eta; raises if non-normalizable."""
        a, b = self.check_param(eta)
        if a <= 0.0 or b - a <= 0.0:
            raise ValueError(f"parameter {eta!r} is not normalizable")
        return a, b - a

    def sample_theta(self, eta, rng):
        alpha, beta = self.shape_params(eta)
        g1 = rng.standard_gamma(alpha)
        g2 = rng.standard_gamma(beta)
        # theta = logit(rho) with rho = g1/(g1+g2); the ratio form never
        # evaluates logit at 0 or 1.
        return np.array([math.log(g1) - math.log(g2)])

    def to_json(self):
        return {"family": "beta_bernoulli"}


class DirichletCategorical(ExpFamSystem):
    """Categorical likelihood over d values with its conjugate Dirichlet prior.

    Observations are category indices in {0, ..., d-1}; S(x) is the indicator
    vector of the first d-1 categories (the last is implied).  eta holds those
    d-1 coordinates plus the total pseudo-count, so the implied per-category
    counts are (eta_0, ..., eta_{d-2}, eta_{d-1} - sum of the rest).
    """

    def __init__(self, d):
        if int(d) != d or d < 2:
            raise ValueError(f"need an integer d >= 2, got {d!r}")
        self.d = int(d)
        self.dim = self.d - 1
        self.delta = math.sqrt(2.0) if self.d > 2 else 1.0

    def implied_counts(self, eta):
        eta = self.check_param(eta)
        head = eta[:-1]
        return np.append(head, eta[-1] - head.sum())

    def log_partition(self, eta):
        counts = self.implied_counts(eta)
        if np.any(counts <= 0.0):
            return math.inf
        return sum(ln_gamma(c) for c in counts) - ln_gamma(float(eta[-1]))

    def suff_stat(self, x):
        k = int(x)
        if k != x or not 0 <= k < self.d:
            raise ValueError(f"observation must be a category in [0, {self.d}), got {x!r}")
        s = np.zeros(self.dim)
        if k < self.dim:
            s[k] = 1.0
        return s

    def stat_extremes(self):
        return [self.suff_stat(k) for k in range(self.d)]

    def sample_theta(self, eta, rng):
        counts = self.implied_counts(eta)
        if np.any(counts <= 0.0):
            raise ValueError(f"parameter {eta!r} is not normalizable")
        g = rng.standard_gamma(counts)
        return np.log(g[:-1]) - math.log(g[-1])

    def to_json(self):
        return {"family": "dirichlet_categorical", "d": self.d}


class GaussianMean(ExpFamSystem):
    """Known-variance Gaussian mean estimation with a Gaussian conjugate prior.

    Observations are clamped to [-clip, clip] before the sufficient statistic
    S(x) = x / sigma_obs^2 is taken, which bounds the statistic range; the
    stored diameter is the full width 2*clip/sigma_obs^2.  With eta = (e1, e2),
    the posterior over the mean is N(sigma_obs^2 * e1 / e2, sigma_obs^2 / e2),
    normalizable iff e2 > 0.
    """

    dim = 1

    def __init__(self, sigma_obs, clip):
        if not (math.isfinite(sigma_obs) and sigma_obs > 0.0):
            raise ValueError(f"sigma_obs must be positive, got {sigma_obs!r}")
        if not (math.isfinite(clip) and clip > 0.0):
            raise ValueError(f"clip must be positive, got {clip!r}")
        self.sigma_obs = float(sigma_obs)
        self.clip = float(clip)
        self.delta = 2.0 * self.clip / self.sigma_obs**2

    def log_partition(self, eta):
        e1, e2 = self.check_param(eta)
        if e2 <= 0.0:
            return math.inf
        s2 = self.sigma_obs**2
        return 0.5 * math.log(2.0 * math.pi * s2 / e2) + s2 * e1 * e1 / (2.0 * e2)

    def suff_stat(self, x):
        x = float(x)
        if math.isnan(x):
            raise ValueError("observation is NaN")
        clamped = min(max(x, -self.clip), self.clip)
        return np.array([clamped / self.sigma_obs**2])

    def stat_extremes(self):
        lo = -self.clip / self.sigma_obs**2
        return [np.array([lo]), np.array([-lo])]

    def sample_theta(self, eta, rng):
        e1, e2 = self.check_param(eta)
        if e2 <= 0.0:
            raise ValueError(f"parameter {eta!r} is not normalizable")
        s2 = self.sigma_obs**2
        mean = s2 * e1 / e2
        sd = math.sqrt(s2 / e2)
        return np.array([mean + sd * rng.standard_normal()])

    def to_json(self):
        return {"family": "gaussian_mean", "sigma_obs": self.sigma_obs, "clip": self.clip}


def system_from_json(obj):
    family = obj.get("family")
    if family == "beta_bernoulli":
        return BetaBernoulli()
    if family == "dirichlet_categorical":
        return DirichletCategorical(obj["d"])
    if family == "gaussian_mean":
        return GaussianMean(obj["sigma_obs"], obj["clip"])
    raise ValueError(f"unknown system family {family!r}")


def log_partition(system, eta):
    """C(eta) for the system; +inf sentinel when eta is not normalizable."""
    return system.log_partition(eta)


def posterior_update(system, eta0, stats, scale=1.0):
    """eta0 + scale * sum_i (stats_i, 1); empty stats returns eta0 unchanged."""
    eta0 = system.check_param(eta0)
    if not system.normalizable(eta0):
        raise ValueError(f"prior {eta0!r} is not normalizable")
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must lie in (0, 1], got {scale!r}")
    total = np.zeros(system.param_len)
    for s in stats:
        s = as_param(s, system.dim)
        total[:-1] += s
        total[-1] += 1.0
    return eta0 + scale * total


def renyi_divergence(system, eta_p, eta_q, lam):
    """Order-lam divergence between family members at eta_p and eta_q.

    Both arguments must be normalizable (they arise as posteriors); the
    result is +inf when the blended parameter lam*eta_p + (1-lam)*eta_q is
    not.  Tiny negative values from cancellation are clamped to 0.
    """
    if not (math.isfinite(lam) and lam > 1.0):
        raise ValueError(f"order lam must be finite and > 1, got {lam!r}")
    eta_p = system.check_param(eta_p)
    eta_q = system.check_param(eta_q)
    c_p = system.log_partition(eta_p)
    c_q = system.log_partition(eta_q)
    if math.isinf(c_p) or math.isinf(c_q):
        raise ValueError("eta_p and eta_q must be normalizable")
    if np.array_equal(eta_p, eta_q):
        return 0.0
    c_l = system.log_partition(lam * eta_p + (1.0 - lam) * eta_q)
    if math.isinf(c_l):
        return math.inf
    return max(0.0, (c_l - lam * c_p) / (lam - 1.0) + c_q)


def sup_neighbor_divergence(system, eta0, n_eff, r, lam):
    """Worst divergence over the boundary pairs of the reachable posterior set.

    Candidate eta_P are the vertices eta0 + n_eff*(s_k, 1) over extreme
    statistics s_k; candidate eta_Q are eta_P + r*(s_i - s_j, 0) over ordered
    i != j.  Non-normalizable eta_Q cannot arise as posteriors and are
    skipped; a non-normalizable blend contributes +inf.  An empty candidate
    set (everything skipped) gives 0.
    """
    eta0 = system.check_param(eta0)
    if not system.normalizable(eta0):
        raise ValueError(f"prior {eta0!r} is not normalizable")
    if n_eff < 0.0:
        raise ValueError(f"n_eff must be >= 0, got {n_eff!r}")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must lie in (0, 1], got {r!r}")
    extremes = system.stat_extremes()
    best = 0.0
    for s_k in extremes:
        eta_p = eta0.copy()
        eta_p[:-1] += n_eff * s_k
        eta_p[-1] += n_eff
        for i, s_i in enumerate(extremes):
            for j, s_j in enumerate(extremes):
                if i == j:
                    continue
                eta_q = eta_p.copy()
                eta_q[:-1] += r * (s_i - s_j)
                if not system.normalizable(eta_q):
                    continue
                d = renyi_divergence(system, eta_p, eta_q, lam)
                if d > best:
                    best = d
                if math.isinf(best):
                    return best
    return best


def lambda_star(system, eta0):
    """Largest order below which direct sampling keeps a finite guarantee.

    Beta-Bernoulli only: 1 + min(alpha0, beta0) for the implied shape pair.
    """
    if not isinstance(system, BetaBernoulli):
        raise TypeError("lambda_star is defined for the Beta-Bernoulli system")
    alpha, beta = system.shape_params(eta0)
    return 1.0 + min(alpha, beta)


def fold_public_data(system, eta0, public_stats):
    """Absorb non-private observations into the prior (full-weight update)."""
    return posterior_update(system, eta0, public_stats, scale=1.0)
