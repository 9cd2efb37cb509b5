"""Information gain, relative entropy and Shannon entropy (natural log units)."""
from __future__ import annotations

import math

import numpy as np

from .dist import Distribution, _same_space
from .errors import NonpositivePlausibility

__all__ = ["information_gain", "relative_entropy", "shannon_entropy", "format_extended"]


def information_gain(p: float, q: float) -> float:
    """Gain ``log(q / p)`` from updating plausibility ``p`` to ``q``.

    Both arguments must lie in (0, 1].
    """
    if not (p > 0 and q > 0):
        raise NonpositivePlausibility(f"plausibilities must be positive, got p={p!r}, q={q!r}")
    if p > 1 or q > 1:
        raise ValueError(f"plausibilities must not exceed 1, got p={p!r}, q={q!r}")
    return math.log(q) - math.log(p)


def relative_entropy(q: Distribution, p: Distribution) -> float:
    """Kullback-Leibler information ``sum q_i log(q_i / p_i)``.

    Terms with ``q_i == 0`` contribute nothing. A term with ``q_i > 0`` and
    ``p_i == 0`` makes the result ``math.inf``.
    """
    _same_space(q.space, p.space)
    qw, pw = q.weights, p.weights
    on = qw > 0
    if np.any(pw[on] == 0):
        return math.inf
    val = float(np.sum(qw[on] * (np.log(qw[on]) - np.log(pw[on]))))
    # rounding can leave a tiny negative number when q == p
    return max(val, 0.0)


def shannon_entropy(p: Distribution) -> float:
    w = p.weights[p.weights > 0]
    return max(float(-np.sum(w * np.log(w))), 0.0)


def format_extended(x: float):
    """JSON-safe rendering of an extended real: infinities become strings."""
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return float(x)
