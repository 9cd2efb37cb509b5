"""Conditioning on an empirical mean versus the MaxEnt/MRE distribution.

Given i.i.d. draws ``X_1..X_N`` from ``base`` conditioned on their sum, the
law of ``X_1`` approaches the minimum relative entropy tilt of ``base`` with
the matching mean as N grows. Everything here is exact: the conditional law
comes from a convolution DP, no sampling involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .dist import Distribution, tv_distance
from .errors import UnachievableSum
from .solver import ConstraintSet, solve_mre

__all__ = [
    "ConvergenceRow",
    "ConvergenceReport",
    "conditional_marginal",
    "enumerate_conditional_marginal",
    "convergence_experiment",
    "DEFAULT_N_LIST",
]

DEFAULT_N_LIST = (2, 4, 8, 16, 24)


def _integer_values(base: Distribution) -> np.ndarray:
    vals = []
    for lab in base.space.labels:
        try:
            v = int(lab)
        except ValueError:
            raise ValueError(f"label {lab!r} is not an integer") from None
        vals.append(v)
    return np.array(vals, dtype=np.int64)


def _shifted(base: Distribution):
    """Support values shifted to start at 0 and the dense weight vector over them."""
    vals = _integer_values(base)
    on = base.weights > 0
    vmin = int(vals[on].min())
    r = int(vals[on].max()) - vmin
    w = np.zeros(r + 1)
    np.add.at(w, vals[on] - vmin, base.weights[on])
    return vals, vmin, w


def conditional_marginal(base: Distribution, N: int, sum_target: int) -> Distribution:
    """Exact law of ``X_1`` given ``X_1 + ... + X_N == sum_target``.

    ``P(X_1 = v | S = s) ∝ base(v) * C_{N-1}(s - v)`` where ``C_k`` is the
    k-fold convolution of ``base``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    vals, vmin, w = _shifted(base)
    r = w.shape[0] - 1
    s = int(sum_target) - N * vmin
    if s < 0 or s > N * r:
        raise UnachievableSum(f"sum {sum_target} is outside the range reachable by {N} draws")
    conv = _kernels.power_convolutions(w, N - 1)[N - 1]
    out = np.zeros(base.space.n)
    for i, v in enumerate(vals):
        p = base.weights[i]
        t = s - (v - vmin)
        if p > 0 and 0 <= t < conv.shape[0]:
            out[i] = p * conv[t]
    total = out.sum()
    if total <= 0:
        raise UnachievableSum(f"sum {sum_target} cannot be reached by {N} draws from the support")
    return Distribution(base.space, out / total)


def enumerate_conditional_marginal(base: Distribution, N: int, sum_target: int) -> Distribution:
    """Brute-force counterpart of :func:`conditional_marginal` over all ``k**N`` sequences."""
    vals = _integer_values(base)
    on = base.weights > 0
    u = vals[on]
    w = base.weights[on]
    acc = _kernels.enumerate_first_marginal(u, np.ascontiguousarray(w), N, int(sum_target))
    if acc.sum() <= 0:
        raise UnachievableSum(f"sum {sum_target} cannot be reached by {N} draws from the support")
    out = np.zeros(base.space.n)
    out[on] = acc / acc.sum()
    return Distribution(base.space, out)


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    sum_target: int
    conditional_marginal: Distribution
    maxent_dist: Distribution
    tv_gap: float


@dataclass(frozen=True)
class ConvergenceReport:
    base: Distribution
    mean_target: float
    rows: tuple[ConvergenceRow, ...]

    def as_dict(self) -> dict:
        return {
            "base": self.base.as_dict(),
            "mean_target": self.mean_target,
            "rows": [
                {
                    "N": r.N,
                    "sum_target": r.sum_target,
                    "conditional_marginal": [float(x) for x in r.conditional_marginal.weights],
                    "maxent": [float(x) for x in r.maxent_dist.weights],
                    "tv_gap": r.tv_gap,
                }
                for r in self.rows
            ],
        }

    def table(self) -> str:
        labels = list(self.base.space.labels)
        head = ["N", "sum", "tv_gap"] + [f"cond[{lab}]" for lab in labels]
        body = []
        for r in self.rows:
            body.append([str(r.N), str(r.sum_target), f"{r.tv_gap:.6e}"]
                        + [f"{x:.6f}" for x in r.conditional_marginal.weights])
        if self.rows:
            body.append(["mre", "-", "-"] + [f"{x:.6f}" for x in self.rows[-1].maxent_dist.weights])
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
        lines = ["  ".join(c.rjust(wd) for c, wd in zip(row, widths)) for row in [head] + body]
        return "\n".join(lines)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def convergence_experiment(base: Distribution, mean_target: float,
                           N_list: Sequence[int] = DEFAULT_N_LIST, tol: float = 1e-10) -> ConvergenceReport:
    """Tabulate the TV gap between the sum-conditioned marginal and the MRE tilt.

    The MRE target for each row is ``sum_target / N``, the mean actually
    conditioned on, not ``mean_target``.
    """
    vals = _integer_values(base)
    on = base.weights > 0
    lo, hi = vals[on].min(), vals[on].max()
    if not lo < mean_target < hi:
        raise ValueError(f"mean target {mean_target} must lie strictly inside ({lo}, {hi})")
    rows = []
    for N in sorted(int(n) for n in N_list):
        s = _round_half_up(mean_target * N)
        cond = conditional_marginal(base, N, s)
        post = solve_mre(base, ConstraintSet(base.space, (), [(vals.astype(float), s / N)]), tol=tol).posterior
        rows.append(ConvergenceRow(N, s, cond, post, tv_distance(cond, post)))
    return ConvergenceReport(base, float(mean_target), tuple(rows))
