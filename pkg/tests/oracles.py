"""Independent numerical oracles used to pin expected values.

Everything here goes through scipy (adaptive quadrature, library special
functions) rather than the package's own code paths, so closed-form results
are checked against an independent route.
"""

import math

import numpy as np
from scipy import integrate
from scipy.special import betaln


def beta_logpdf(rho, alpha, beta):
    return (alpha - 1.0) * np.log(rho) + (beta - 1.0) * np.log1p(-rho) - betaln(alpha, beta)


def renyi_beta_quad(eta_p, eta_q, lam, tol=1e-10):
    """Order-lam divergence between Beta members by adaptive quadrature.

    Integrates P^lam * Q^(1-lam) over the mean parameter; the value is
    invariant under the monotone map to the natural parameter.
    """
    a1, b1 = eta_p[0], eta_p[1] - eta_p[0]
    a2, b2 = eta_q[0], eta_q[1] - eta_q[0]

    def f(rho):
        return math.exp(lam * beta_logpdf(rho, a1, b1) + (1.0 - lam) * beta_logpdf(rho, a2, b2))

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=400)
    return math.log(val) / (lam - 1.0)


def kl_beta_quad(eta_p, eta_q, tol=1e-10):
    a1, b1 = eta_p[0], eta_p[1] - eta_p[0]
    a2, b2 = eta_q[0], eta_q[1] - eta_q[0]

    def f(rho):
        lp = beta_logpdf(rho, a1, b1)
        return math.exp(lp) * (lp - beta_logpdf(rho, a2, b2))

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=400)
    return val


def random_beta_pair(gen, lam_max=5.0):
    """A random normalizable Beta pair whose blend stays normalizable.

    Keeps the offset small relative to the smaller shape so that
    lam*eta_P + (1-lam)*eta_Q remains inside the normalizable set for
    orders up to lam_max.
    """
    while True:
        a = gen.uniform(2.0, 40.0)
        b = gen.uniform(2.0, 40.0)
        margin = min(a, b) / (2.0 * lam_max)
        da = gen.uniform(-margin, margin)
        db = gen.uniform(-margin, margin)
        eta_p = np.array([a, a + b])
        eta_q = np.array([a + da, a + b + da + db])
        blend_a = lam_max * a - (lam_max - 1.0) * (a + da)
        blend_b = lam_max * b - (lam_max - 1.0) * (b + db)
        if blend_a > 0.1 and blend_b > 0.1:
            return eta_p, eta_q


def beta_interior_pairs(gen, eta0, n, r, count):
    """Random r-neighboring pairs strictly inside the Beta reachable set."""
    pairs = []
    for _ in range(count):
        t = gen.uniform(0.0, 1.0)
        eta_p = np.array([eta0[0] + n * t, eta0[1] + n])
        direction = gen.choice((-1.0, 1.0)) * gen.uniform(0.0, 1.0)
        eta_q = eta_p + np.array([r * direction, 0.0])
        if eta_q[0] > 0.0 and eta_q[1] - eta_q[0] > 0.0:
            pairs.append((eta_p, eta_q))
    return pairs


def dirichlet_interior_pairs(gen, eta0, n, r, count):
    """Random r-neighboring pairs inside the d=3 Dirichlet reachable set."""
    eta0 = np.asarray(eta0, dtype=float)
    stats = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.0, 0.0])]
    pairs = []
    while len(pairs) < count:
        mix = gen.dirichlet(np.ones(3))
        stat_mean = sum(m * s for m, s in zip(mix, stats))
        eta_p = eta0 + n * np.append(stat_mean, 1.0)
        weights = gen.dirichlet(np.ones(6))
        offset = np.zeros(2)
        k = 0
        for i in range(3):
            for j in range(3):
                if i != j:
                    offset += weights[k] * (stats[i] - stats[j])
                    k += 1
        eta_q = eta_p + r * np.append(offset, 0.0)
        counts = np.append(eta_q[:-1], eta_q[-1] - eta_q[:-1].sum())
        if np.all(counts > 0.0):
            pairs.append((eta_p, eta_q))
    return pairs
