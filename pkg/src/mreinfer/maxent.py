"""Maximum entropy as minimum relative entropy from the uniform prior."""
from __future__ import annotations

import numpy as np

from .dist import Distribution, OutcomeSpace
from .solver import ConstraintSet, MreSolution, solve_mre

__all__ = ["indifference_prior", "maxent"]


def indifference_prior(space: OutcomeSpace) -> Distribution:
    """Equal weight ``1/n`` on every outcome."""
    return Distribution(space, np.full(space.n, 1.0 / space.n))


def maxent(space: OutcomeSpace, constraints: ConstraintSet, tol: float = 1e-10,
           max_iter: int = 200) -> MreSolution:
    """Entropy-maximizing distribution under ``constraints``.

    Delegates to :func:`solve_mre` with the indifference prior, so the result is
    identical to that call.
    """
    return solve_mre(indifference_prior(space), constraints, tol=tol, max_iter=max_iter)
