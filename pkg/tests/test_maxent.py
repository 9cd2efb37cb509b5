import math

import numpy as np
import pytest

from mreinfer import ConstraintSet, OutcomeSpace, make_distribution, relative_entropy, shannon_entropy, solve_mre
from mreinfer.maxent import indifference_prior, maxent

from test_solver import DICE_45, random_moment_problem


@pytest.mark.parametrize("n", [1, 2, 6])
def test_indifference_prior(n):
    u = indifference_prior(OutcomeSpace(f"o{i}" for i in range(n)))
    assert np.all(u.weights == 1.0 / n)


def test_examples(dice):
    np.testing.assert_allclose(maxent(dice, ConstraintSet(dice)).posterior.weights, 1 / 6, atol=1e-15)
    np.testing.assert_allclose(maxent(dice, ConstraintSet.mean(dice, 3.5)).posterior.weights, 1 / 6, atol=1e-14)
    np.testing.assert_allclose(maxent(dice, ConstraintSet.mean(dice, 4.5)).posterior.weights, DICE_45, atol=1e-6)


def test_is_solve_mre_with_uniform(rng):
    for _ in range(50):
        prior, cs = random_moment_problem(rng)
        a = maxent(prior.space, cs)
        b = solve_mre(indifference_prior(prior.space), cs)
        assert a.posterior == b.posterior


def test_duality_identity_and_optimality(rng):
    for _ in range(100):
        _, cs = random_moment_problem(rng)
        space = cs.space
        post = maxent(space, cs).posterior
        u = indifference_prior(space)
        assert abs(relative_entropy(post, u) + shannon_entropy(post) - math.log(space.n)) <= 1e-10
        # any other feasible point: move along the null space of the constraints
        from scipy.linalg import null_space
        basis = null_space(np.vstack([cs.A, np.ones(space.n)]))
        if basis.shape[1] == 0:
            continue
        q = post.weights
        for _ in range(20):
            d = basis @ rng.normal(size=basis.shape[1])
            neg = d < 0
            eps = np.min(-q[neg] / d[neg]) if neg.any() else 1.0
            cand = make_distribution(space, np.clip(q + rng.uniform() * eps * d, 0, None))
            assert shannon_entropy(cand) <= shannon_entropy(post) + 1e-9
