"""Log-gamma family special functions: ln Gamma, psi0 (digamma), psi1 (trigamma).

The polygamma values are evaluated by upward recurrence into the asymptotic
regime followed by the truncated Bernoulli series; ln Gamma delegates to the
C library's ``lgamma``.  Scalar only, no array broadcasting.
"""

import math

__all__ = ["ln_gamma", "digamma", "trigamma"]

# Recurrence pushes the argument above this before the asymptotic series is
# applied; with Bernoulli terms through x^-14 / x^-15 the truncation error at
# x = 10 is below 1e-15 relative.
_ASYMPTOTIC_MIN = 10.0

# Arguments this small would overflow the recurrence accumulators.
_DOMAIN_FLOOR = 1e-300

# B_{2n}/(2n), n = 1..7 (digamma tail coefficients of x^{-2n}).
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

# B_{2n}, n = 1..7 (trigamma tail coefficients of x^{-(2n+1)}).
_TRIGAMMA_TAIL = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)


def _checked(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x) or x < _DOMAIN_FLOOR:
        raise ValueError(f"argument must be a positive finite real, got {x!r}")
    return x


def ln_gamma(x):
    """ln Gamma(x) for x > 0."""
    return math.lgamma(_checked(x))


def digamma(x):
    """psi0(x) = d/dx ln Gamma(x) for x > 0."""
    x = _checked(x)
    acc = 0.0
    while x < _ASYMPTOTIC_MIN:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    power = inv2
    for coef in _DIGAMMA_TAIL:
        tail += coef * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - tail


def trigamma(x):
    """psi1(x) = d^2/dx^2 ln Gamma(x) for x > 0; positive and decreasing."""
    x = _checked(x)
    acc = 0.0
    while x < _ASYMPTOTIC_MIN:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    tail = 0.0
    power = inv * inv2
    for coef in _TRIGAMMA_TAIL:
        tail += coef * power
        power *= inv2
    return acc + inv + 0.5 * inv2 + tail
