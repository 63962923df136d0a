"""Releasing mechanisms over conjugate systems.

Every mechanism draws from a seeded stream and returns the posterior
parameter it actually sampled from, so privacy can be re-audited after the
fact.  Calibrated mechanisms refuse to release (typed error) when the search
fails; they never fall back to direct sampling silently.
"""

import math
from dataclasses import dataclass

import numpy as np

from .calibrate import DEFAULT_MAX_ITERS, find_m, find_r
from .expfam import BetaBernoulli, posterior_update

__all__ = [
    "RngStream",
    "MechanismOutput",
    "ReleaseRefusedError",
    "sample_direct",
    "sample_diffused",
    "sample_concentrated",
    "gaussian_baseline",
    "beta_stat_query",
]


class ReleaseRefusedError(RuntimeError):
    """Calibration failed within its iteration budget; nothing is released."""

    def __init__(self, result):
        super().__init__(
            f"no feasible coefficient found (best sup {result.achieved_sup!r} "
            f"after {result.iterations_used} iterations)"
        )
        self.result = result


@dataclass(frozen=True)
class RngStream:
    """A named deterministic generator; equal seeds replay equal sequences."""

    seed: int
    algorithm: str = "pcg64"

    def generator(self):
        if self.algorithm != "pcg64":
            raise ValueError(f"unknown rng algorithm {self.algorithm!r}")
        return np.random.Generator(np.random.PCG64(self.seed))


@dataclass(frozen=True)
class MechanismOutput:
    theta: np.ndarray
    posterior_param: np.ndarray
    coefficient_used: float
    seed: int

    def to_json(self):
        return {
            "theta": [float(v) for v in self.theta],
            "posterior_param": [float(v) for v in self.posterior_param],
            "coefficient_used": self.coefficient_used,
            "seed": self.seed,
        }


def _stats(system, data):
    return [system.suff_stat(x) for x in data]


def sample_direct(system, eta0, data, rng):
    """Draw theta from the true posterior eta0 + sum (S(x), 1)."""
    eta = posterior_update(system, eta0, _stats(system, data))
    theta = system.sample_theta(eta, rng.generator())
    return MechanismOutput(theta, eta, 1.0, rng.seed)


def sample_diffused(system, eta0, data, budget, rng, max_iters=DEFAULT_MAX_ITERS):
    """Calibrate the data scale r, then draw from eta0 + r * sum (S(x), 1)."""
    data = list(data)
    result = find_r(system, eta0, len(data), budget, max_iters)
    if not result.satisfied:
        raise ReleaseRefusedError(result)
    eta = posterior_update(system, eta0, _stats(system, data), scale=result.coefficient)
    theta = system.sample_theta(eta, rng.generator())
    return MechanismOutput(theta, eta, result.coefficient, rng.seed)


def sample_concentrated(system, eta0, data, budget, rng, max_iters=DEFAULT_MAX_ITERS):
    """Calibrate the prior scale m, then draw from eta0/m + sum (S(x), 1)."""
    data = list(data)
    result = find_m(system, eta0, len(data), budget, max_iters)
    if not result.satisfied:
        raise ReleaseRefusedError(result)
    eta0 = system.check_param(eta0)
    eta = posterior_update(system, eta0 / result.coefficient, _stats(system, data))
    theta = system.sample_theta(eta, rng.generator())
    return MechanismOutput(theta, eta, result.coefficient, rng.seed)


def gaussian_baseline(eta0, data, budget, rng):
    """Additive-noise baseline on the Beta-Bernoulli sufficient statistic.

    The summed statistic gets Gaussian noise with sigma^2 = lam * Delta^2 /
    epsilon (the variance meeting the budget for a Delta-bounded family),
    is projected back onto its feasible range [0, n], and the posterior for
    the noisy statistic is sampled.
    """
    system = BetaBernoulli()
    vals = [system.suff_stat(x)[0] for x in data]
    n = float(len(vals))
    s = float(sum(vals))
    sigma = math.sqrt(budget.lam * system.delta**2 / budget.epsilon)
    gen = rng.generator()
    s_noisy = min(max(s + sigma * gen.standard_normal(), 0.0), n)
    eta0 = system.check_param(eta0)
    eta = eta0 + np.array([s_noisy, n])
    theta = system.sample_theta(eta, gen)
    return MechanismOutput(theta, eta, 1.0, rng.seed)


def beta_stat_query(data, phi, eta0, budget, mode, rng, max_iters=DEFAULT_MAX_ITERS):
    """Release a privatized mean of a [0, 1]-valued predicate over the data.

    The predicate values feed the Beta-Bernoulli system with fractional
    statistics; the chosen calibrated mechanism samples theta and only the
    mean-scale transform rho = sigmoid(theta) in (0, 1) is released.
    """
    vals = []
    for x in data:
        v = float(phi(x))
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"predicate value {v!r} outside [0, 1] for record {x!r}")
        vals.append(v)
    system = BetaBernoulli()
    if mode == "diffused":
        out = sample_diffused(system, eta0, vals, budget, rng, max_iters)
    elif mode == "concentrated":
        out = sample_concentrated(system, eta0, vals, budget, rng, max_iters)
    else:
        raise ValueError(f"mode must be 'diffused' or 'concentrated', got {mode!r}")
    theta = float(out.theta[0])
    if theta >= 0.0:
        return 1.0 / (1.0 + math.exp(-theta))
    return math.exp(theta) / (1.0 + math.exp(theta))
