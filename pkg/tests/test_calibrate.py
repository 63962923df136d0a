
import numpy as np
import pytest

from rdposterior.calibrate import find_m, find_r
from rdposterior.expfam import (
    BetaBernoulli,
    PrivacyBudget,
    sup_neighbor_divergence,
)

BETA = BetaBernoulli()
ETA0 = [6.0, 18.0]


def test_loose_budget_returns_one_exactly():
    for search in (find_r, find_m):
        res = search(BETA, ETA0, 100, PrivacyBudget(2.0, 1e6))
        assert res.coefficient == 1.0
        assert res.satisfied
        assert res.achieved_sup <= 1e6


def test_find_r_high_order_budget():
    budget = PrivacyBudget(15.0, 0.5)
    res = find_r(BETA, ETA0, 100, budget)
    assert res.satisfied
    assert 0.0 < res.coefficient < 1.0
    assert res.achieved_sup <= 0.5
    # re-verify the exact predicate at the returned point
    sup = sup_neighbor_divergence(BETA, ETA0, res.coefficient * 100, res.coefficient, 15.0)
    assert sup == res.achieved_sup
    assert sup <= 0.5


def test_find_m_high_order_budget():
    budget = PrivacyBudget(15.0, 0.5)
    res = find_m(BETA, ETA0, 100, budget)
    assert res.satisfied
    assert 0.0 < res.coefficient < 1.0
    eta0 = np.asarray(ETA0)
    sup = sup_neighbor_divergence(BETA, eta0 / res.coefficient, 100, 1.0, 15.0)
    assert sup == res.achieved_sup <= 0.5


def test_find_m_uniform_prior_regime():
    res = find_m(BETA, [1.0, 2.0], 100, PrivacyBudget(15.0, 1.0))
    assert res.satisfied and res.achieved_sup <= 1.0


def test_tiny_epsilon_postcondition_only():
    res = find_r(BETA, ETA0, 100, PrivacyBudget(2.0, 1e-6))
    assert res.satisfied
    assert res.achieved_sup <= 1e-6


def test_unsatisfied_within_iteration_budget():
    res = find_r(BETA, ETA0, 100, PrivacyBudget(15.0, 1e-4), max_iters=2)
    assert not res.satisfied
    assert 0.0 < res.coefficient <= 1.0
    assert res.achieved_sup > 1e-4
    assert res.iterations_used == 2


def test_iterations_bounded_by_max():
    res = find_r(BETA, ETA0, 100, PrivacyBudget(15.0, 0.5), max_iters=40)
    assert res.iterations_used <= 40
    assert res.satisfied


def test_invalid_inputs():
    with pytest.raises(ValueError):
        find_r(BETA, [0.0, 18.0], 100, PrivacyBudget(2.0, 1.0))
    with pytest.raises(ValueError):
        find_r(BETA, ETA0, -1, PrivacyBudget(2.0, 1.0))
    with pytest.raises(ValueError):
        find_r(BETA, ETA0, 100, PrivacyBudget(2.0, 1.0), max_iters=0)


def test_empirical_monotonicity_on_fig1_grid():
    # the achieved sup should not decrease as the coefficient grows
    for lam in (2.0, 15.0):
        sups_r = [
            sup_neighbor_divergence(BETA, ETA0, c * 100, c, lam)
            for c in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(sups_r, sups_r[1:]))
        eta0 = np.asarray(ETA0)
        sups_m = [
            sup_neighbor_divergence(BETA, eta0 / c, 100, 1.0, lam)
            for c in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(sups_m, sups_m[1:]))


def test_returned_coefficient_is_largest_tested_satisfying():
    budget = PrivacyBudget(15.0, 0.5)
    res = find_r(BETA, ETA0, 100, budget, max_iters=60)
    # any larger candidate on the bisection trajectory must violate the budget
    bigger = min(1.0, res.coefficient * 1.01)
    sup = sup_neighbor_divergence(BETA, ETA0, bigger * 100, bigger, 15.0)
    assert sup > 0.5 or bigger == res.coefficient
