import math

import numpy as np
import pytest
from scipy.linalg import null_space

from mreinfer import (
    ConstraintSet,
    Event,
    Moment,
    OutcomeSpace,
    check_feasibility,
    dual_gradient,
    dual_objective,
    exponential_tilt,
    make_distribution,
    relative_entropy,
    restrict,
    solve_mre,
    tv_distance,
)
from mreinfer.errors import AllMassExcluded, Infeasible, NotConverged, UnboundedDual
from mreinfer.maxent import indifference_prior

from conftest import random_distribution, random_event
from oracles import grid_bisection_tilt

# tilt of the uniform die to mean 4.5, mpmath at 40 digits
DICE_45 = [0.054353167826491518, 0.078771545633053519, 0.11415997722944056,
           0.16544680311005334, 0.23977444042689998, 0.34749406577406109]


def random_moment_problem(rng, n=None, m=None, zero_frac=0.0):
    n = n or int(rng.integers(2, 11))
    m = m if m is not None else int(rng.integers(1, min(3, n - 1) + 1))
    prior = random_distribution(rng, n, zero_frac=zero_frac)
    inner = rng.dirichlet(np.ones(n)) * prior.support
    inner /= inner.sum()
    A = rng.normal(size=(m, n))
    b = A @ inner
    return prior, ConstraintSet(prior.space, (), [Moment(a, t) for a, t in zip(A, b)])


def test_oracle_agrees_with_frozen_dice():
    w, _ = grid_bisection_tilt(range(1, 7), [1 / 6] * 6, 4.5)
    np.testing.assert_allclose(w, DICE_45, rtol=0, atol=1e-13)


def test_dice_mean_45(dice):
    sol = solve_mre(indifference_prior(dice), ConstraintSet.mean(dice, 4.5))
    np.testing.assert_allclose(sol.posterior.weights, DICE_45, rtol=0, atol=1e-6)
    np.testing.assert_allclose(sol.posterior.weights, DICE_45, rtol=0, atol=1e-12)
    assert sol.kkt_residual <= 1e-10
    assert sol.multipliers[0] == pytest.approx(-0.37104893808103334, abs=1e-10)


def test_prior_already_feasible(dice):
    sol = solve_mre(indifference_prior(dice), ConstraintSet.mean(dice, 3.5))
    np.testing.assert_allclose(sol.posterior.weights, 1 / 6, atol=1e-14)
    assert abs(sol.multipliers[0]) < 1e-12
    assert sol.achieved_kl < 1e-14


def test_event_only_reduces_to_restrict():
    space = OutcomeSpace("abc")
    prior = make_distribution(space, [0.2, 0.3, 0.5])
    sol = solve_mre(prior, ConstraintSet(space, ["c"]))
    np.testing.assert_allclose(sol.posterior.weights, [0.4, 0.6, 0.0], atol=1e-15)
    assert sol.posterior.weights[2] == 0.0
    assert len(sol.multipliers) == 1


def test_event_only_randomized(rng):
    for _ in range(1000):
        prior = random_distribution(rng, int(rng.integers(1, 9)), zero_frac=0.2)
        ev = random_event(rng, prior.space)
        if prior.prob(ev) <= 0:
            continue
        sol = solve_mre(prior, ConstraintSet(prior.space, ev.complement()))
        assert tv_distance(sol.posterior, restrict(prior, ev)) <= 1e-10
        assert np.all(sol.posterior.weights[~ev.mask] == 0.0)


def test_tilt_examples():
    dice = OutcomeSpace.range(1, 6)
    u = indifference_prior(dice)
    assert exponential_tilt(u, ConstraintSet(dice), []) == u
    assert tv_distance(exponential_tilt(u, ConstraintSet.mean(dice, 3.5), [0.0]), u) <= 1e-15
    two = OutcomeSpace.range(1, 2)
    t = exponential_tilt(indifference_prior(two), ConstraintSet.mean(two, 1.5), [math.log(2)])
    # weights ∝ exp(-log2 * a) = (1/2, 1/4)
    np.testing.assert_allclose(t.weights, [2 / 3, 1 / 3], atol=1e-15)


def test_tilt_zeros_and_prior_zeros():
    space = OutcomeSpace("abcd")
    prior = make_distribution(space, [0.0, 1, 1, 1])
    t = exponential_tilt(prior, ConstraintSet(space, ["d"], [([1, 2, 3, 4], 2.5)]), [0.3])
    assert t.weights[0] == 0 and t.weights[3] == 0
    with pytest.raises(AllMassExcluded):
        exponential_tilt(prior, ConstraintSet(space, ["b", "c", "d"]), [])


def test_feasibility_examples(dice):
    u = indifference_prior(dice)
    assert check_feasibility(u, ConstraintSet.mean(dice, 7)).status == "infeasible"
    assert check_feasibility(u, ConstraintSet.mean(dice, 6)).status == "boundary-feasible"
    assert check_feasibility(u, ConstraintSet.mean(dice, 4.5)).status == "feasible"
    rep = check_feasibility(u, ConstraintSet.mean(dice, 7))
    assert rep.moments[0].hi == 6.0 and "maximum achievable value 6.0" in rep.describe()


def test_feasibility_respects_prior_support(dice):
    prior = make_distribution(dice, [1, 1, 1, 1, 1, 0])
    rep = check_feasibility(prior, ConstraintSet.mean(dice, 5.5))
    assert rep.status == "infeasible"
    assert rep.moments[0].hi == 5.0


def test_infeasible_errors(dice):
    u = indifference_prior(dice)
    with pytest.raises(UnboundedDual, match="maximum achievable value 6"):
        solve_mre(u, ConstraintSet.mean(dice, 7))
    with pytest.raises(AllMassExcluded):
        ConstraintSet(dice, dice.labels)
    prior = make_distribution(dice, [1, 1, 0, 0, 0, 0])
    with pytest.raises(AllMassExcluded):
        solve_mre(prior, ConstraintSet(dice, ["1", "2"]))
    space = OutcomeSpace("abc")
    joint = ConstraintSet(space, (), [([1, 0, 0], 0.9), ([0, 1, 0], 0.9)])
    with pytest.raises(Infeasible, match="jointly inconsistent"):
        solve_mre(indifference_prior(space), joint)


@pytest.mark.parametrize("target, mass_on", [(6, "6"), (1, "1")])
def test_boundary_point_mass(dice, target, mass_on):
    sol = solve_mre(indifference_prior(dice), ConstraintSet.mean(dice, target))
    assert sol.posterior[mass_on] == 1.0
    assert sol.boundary
    assert math.isinf(sol.multipliers[0])


def test_boundary_face_from_joint_constraints():
    space = OutcomeSpace("abc")
    cs = ConstraintSet(space, (), [([1, -1, 0], 0.5), ([0, 1, 1], 0.5)])
    sol = solve_mre(indifference_prior(space), cs)
    np.testing.assert_allclose(sol.posterior.weights, [0.5, 0.0, 0.5], atol=1e-12)
    assert sol.posterior.weights[1] == 0.0
    assert sol.boundary


def test_not_converged_returns_best_iterate(dice):
    with pytest.raises(NotConverged) as info:
        solve_mre(indifference_prior(dice), ConstraintSet.mean(dice, 4.5), max_iter=1)
    sol = info.value.solution
    assert not sol.converged
    assert sol.iterations == 1
    assert sol.kkt_residual > 1e-10


def test_collinear_moments(dice):
    values = np.arange(1, 7.0)
    cs = ConstraintSet(dice, (), [(values, 4.5), (2 * values, 9.0)])
    sol = solve_mre(indifference_prior(dice), cs)
    np.testing.assert_allclose(sol.posterior.weights, DICE_45, atol=1e-10)


def _kkt_ok(prior, cs, sol, tol):
    q = sol.posterior.weights
    if cs.m:
        assert np.max(np.abs(cs.A @ q - cs.b)) <= tol
    assert abs(q.sum() - 1) <= tol
    tilt = exponential_tilt(prior, cs, sol.multipliers[:-1])
    assert np.max(np.abs(tilt.weights - q)) <= tol


def test_kkt_certificate_randomized(rng):
    for _ in range(300):
        prior, cs = random_moment_problem(rng, zero_frac=0.15)
        sol = solve_mre(prior, cs)
        assert sol.kkt_residual <= 1e-10
        if not sol.boundary:
            _kkt_ok(prior, cs, sol, 1e-10)
        # support monotonicity
        assert not np.any(sol.posterior.support & ~prior.support)


def test_optimal_against_perturbations(rng):
    for _ in range(100):
        prior, cs = random_moment_problem(rng)
        sol = solve_mre(prior, cs)
        q = sol.posterior.weights
        on = q > 0
        basis = null_space(np.vstack([cs.A[:, on], np.ones(on.sum())]))
        if basis.shape[1] == 0:
            continue
        for _ in range(20):
            d = np.zeros_like(q)
            d[on] = basis @ rng.normal(size=basis.shape[1])
            neg = d < 0
            eps_max = np.min(-q[neg] / d[neg]) if neg.any() else 1.0
            qp = q + rng.uniform(0, 1) * eps_max * d
            qp = np.clip(qp, 0, None)
            cand = make_distribution(prior.space, qp)
            assert relative_entropy(cand, prior) >= sol.achieved_kl - 1e-9


def test_dual_gradient_finite_differences(rng):
    for _ in range(100):
        prior, cs = random_moment_problem(rng)
        lam = rng.normal(size=cs.m)
        g = dual_gradient(prior, cs, lam)
        h = 1e-5
        fd = np.array([(dual_objective(prior, cs, lam + h * e) - dual_objective(prior, cs, lam - h * e)) / (2 * h)
                       for e in np.eye(cs.m)])
        assert np.max(np.abs(g - fd)) <= 1e-6


def test_solver_is_deterministic(dice):
    a = solve_mre(indifference_prior(dice), ConstraintSet.mean(dice, 2.2))
    b = solve_mre(indifference_prior(dice), ConstraintSet.mean(dice, 2.2))
    assert a.posterior == b.posterior
    assert np.array_equal(a.multipliers, b.multipliers)


def test_stationarity_uses_normalization_multiplier(dice):
    prior = make_distribution(dice, [3, 1, 4, 1, 5, 9])
    sol = solve_mre(prior, ConstraintSet.mean(dice, 3.0))
    lam, nu = sol.multipliers[0], sol.multipliers[1]
    q, p = sol.posterior.weights, prior.weights
    np.testing.assert_allclose(np.log(q / p) + 1 + lam * np.arange(1, 7) + nu, 0, atol=1e-12)
