import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from mreinfer import OutcomeSpace, information_gain, make_distribution, relative_entropy, shannon_entropy
from mreinfer.errors import NonpositivePlausibility
from mreinfer.maxent import indifference_prior

from conftest import random_distribution

plaus = st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)
AB = OutcomeSpace("ab")


def test_gain_examples():
    assert information_gain(0.5, 0.5) == 0
    assert information_gain(0.25, 0.5) == pytest.approx(math.log(2), abs=1e-15)
    assert information_gain(0.5, 0.25) == pytest.approx(-math.log(2), abs=1e-15)


@pytest.mark.parametrize("p, q", [(0, 0.5), (0.5, 0), (-0.1, 0.2)])
def test_gain_rejects_nonpositive(p, q):
    with pytest.raises(NonpositivePlausibility):
        information_gain(p, q)


@settings(max_examples=300, deadline=None)
@given(plaus, plaus, plaus, plaus)
def test_path_independence(p, r, r2, q):
    lhs = information_gain(p, r) + information_gain(r, q)
    rhs = information_gain(p, r2) + information_gain(r2, q)
    assert abs(lhs - rhs) <= 1e-12
    assert abs(lhs - information_gain(p, q)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(plaus, plaus, st.floats(1e-3, 1.0))
def test_unit_invariance(p, q, t):
    assert abs(information_gain(t * p, t * q) - information_gain(p, q)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(plaus, st.lists(plaus, min_size=2, max_size=20, unique=True))
@example(1.0, [1e-06, 1.0000000000000002e-06])
def test_monotone_in_posterior(p, qs):
    qs = sorted(qs)
    gains = [information_gain(p, q) for q in qs]
    assert all(a <= b for a, b in zip(gains, gains[1:]))
    # q values one ulp apart can round to the same log; demand strictness above that
    assert all(a < b for a, b, x, y in zip(gains, gains[1:], qs, qs[1:]) if y > x * (1 + 1e-12))


def test_relative_entropy_examples():
    q = make_distribution(AB, [0.4, 0.6])
    p = make_distribution(AB, [0.5, 0.5])
    # mpmath, 40 digits
    assert relative_entropy(q, p) == pytest.approx(0.020135513550688873, abs=1e-15)
    assert relative_entropy(q, q) == 0
    assert relative_entropy(make_distribution(AB, [1, 0]), make_distribution(AB, [0, 1])) == math.inf
    # zero where both vanish contributes nothing
    assert relative_entropy(make_distribution(AB, [1, 0]), make_distribution(AB, [1, 0])) == 0


def test_shannon_entropy_examples():
    assert shannon_entropy(indifference_prior(OutcomeSpace("abcd"))) == pytest.approx(math.log(4), abs=1e-15)
    assert shannon_entropy(make_distribution(OutcomeSpace("abc"), [0, 1, 0])) == 0
    assert shannon_entropy(make_distribution(OutcomeSpace("abc"), [0.2, 0.3, 0.5])) == pytest.approx(
        1.0296530140645735, abs=1e-15)


def test_gibbs_inequality(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 10))
        p = random_distribution(rng, n)
        q = p if rng.random() < 0.2 else random_distribution(rng, n, zero_frac=0.3)
        kl = relative_entropy(q, p)
        tv = np.abs(q.weights - p.weights).sum() / 2
        assert kl >= 0
        if tv <= 1e-12:
            assert kl <= 1e-12
        else:
            assert kl > 0


def test_entropy_kl_identity(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        p = random_distribution(rng, n, zero_frac=0.2)
        u = indifference_prior(p.space)
        assert abs(relative_entropy(p, u) - (math.log(n) - shannon_entropy(p))) <= 1e-12
        assert 0 <= shannon_entropy(p) <= math.log(n) + 1e-12
