"""Maximum likelihood as minimum empirical relative entropy.

On a finite outcome space the empirical distribution has computable entropy,
so ``KL(empirical || model_theta) = -H(empirical) - loglik(theta) / N``
exactly and maximizing the likelihood is the same as minimizing that KL.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .dist import Distribution, OutcomeSpace, make_distribution
from .errors import DegenerateData, ThetaOutOfDomain
from .info import relative_entropy

__all__ = [
    "Dataset",
    "ParametricModel",
    "MleReport",
    "bernoulli",
    "categorical",
    "truncated_geometric",
    "MODELS",
    "register_model",
    "log_likelihood",
    "empirical_kl",
    "mle_fit",
    "grid_profile",
    "simulate",
]

INTERPRETATION = ("model density plays the role of the prior and the empirical "
                  "distribution that of the posterior; the fit minimizes KL(empirical || model)")


@dataclass(frozen=True, eq=False)
class Dataset:
    space: OutcomeSpace
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (self.space.n,):
            raise ValueError(f"expected {self.space.n} counts, got shape {c.shape}")
        if not np.all(np.equal(np.mod(c, 1), 0)) or np.any(c < 0):
            raise ValueError("counts must be nonnegative integers")
        c = c.astype(np.int64)
        if c.sum() < 1:
            raise ValueError("a dataset needs at least one observation")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_mapping(cls, space: OutcomeSpace, counts: Mapping[str, int]) -> "Dataset":
        c = np.zeros(space.n, dtype=np.int64)
        for label, k in counts.items():
            if isinstance(k, bool) or not float(k).is_integer():
                raise ValueError(f"count for {label!r} is not an integer: {k!r}")
            c[space.index(label)] = int(k)
        return cls(space, c)

    @classmethod
    def from_labels(cls, space: OutcomeSpace, observations: Sequence[str]) -> "Dataset":
        c = np.zeros(space.n, dtype=np.int64)
        for obs in observations:
            c[space.index(obs)] += 1
        return cls(space, c)

    def empirical(self) -> Distribution:
        return make_distribution(self.space, self.counts)


@dataclass(frozen=True, eq=False)
class ParametricModel:
    """Finitely parameterized family ``theta -> Distribution``.

    ``weights`` maps a parameter vector (already checked against the box) to a
    probability vector. ``closed_form`` optionally maps a count vector to the
    exact maximizer; ``score`` optionally gives the log-likelihood gradient for
    one-parameter families.
    """

    name: str
    space: OutcomeSpace
    lower: np.ndarray
    upper: np.ndarray
    weights: Callable[[np.ndarray], np.ndarray]
    closed_form: Callable[[np.ndarray], np.ndarray] | None = None
    score: Callable[[np.ndarray, np.ndarray], float] | None = None
    constraint: Callable[[np.ndarray], bool] | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def check(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        if th.shape != (self.dim,):
            raise ThetaOutOfDomain(f"{self.name}: expected {self.dim} parameters, got {th.shape}")
        if (not np.all(np.isfinite(th)) or np.any(th < self.lower) or np.any(th > self.upper)
                or (self.constraint is not None and not self.constraint(th))):
            raise ThetaOutOfDomain(f"{self.name}: theta {th.tolist()} outside the parameter domain")
        return th

    def density(self, theta) -> Distribution:
        return Distribution(self.space, self.weights(self.check(theta)))

    def on_boundary(self, theta) -> bool:
        th = np.asarray(theta, dtype=np.float64)
        return bool(np.any(th == self.lower) or np.any(th == self.upper)
                    or np.any(self.weights(th) == 0))


def bernoulli(labels: Sequence[str] = ("1", "0")) -> ParametricModel:
    """Two outcomes; theta is the probability of the first label."""
    space = OutcomeSpace(labels)
    if space.n != 2:
        raise ValueError("a Bernoulli model needs exactly two labels")
    return ParametricModel(
        "bernoulli", space, np.array([0.0]), np.array([1.0]),
        weights=lambda th: np.array([th[0], 1.0 - th[0]]),
        closed_form=lambda c: np.array([c[0] / c.sum()]),
    )


def categorical(labels: Sequence[str]) -> ParametricModel:
    """Full simplex; theta holds the first ``n - 1`` weights."""
    space = OutcomeSpace(labels)
    k = space.n - 1

    def weights(th):
        return np.append(th, max(1.0 - th.sum(), 0.0))

    return ParametricModel(
        "categorical", space, np.zeros(k), np.ones(k),
        weights=weights,
        closed_form=lambda c: c[:-1] / c.sum(),
        constraint=lambda th: th.sum() <= 1.0 + 1e-12,
    )


def truncated_geometric(m: int) -> ParametricModel:
    """``f(k) ∝ theta**(k-1)`` on ``{1..m}``.

    The endpoints are the limits: theta = 0 is a point mass on 1 and
    theta = 1 the uniform distribution.
    """
    if m < 2:
        raise ValueError("truncated geometric needs m >= 2")
    space = OutcomeSpace.range(1, m)
    powers = np.arange(m)

    def weights(th):
        t = th[0]
        w = t ** powers  # 0**0 == 1
        return w / w.sum()

    def score(th, counts):
        t = th[0]
        s = (t ** powers).sum()
        ds = (powers[1:] * t ** (powers[1:] - 1)).sum()
        return float((counts * powers).sum() / t - counts.sum() * ds / s)

    return ParametricModel("truncated_geometric", space, np.array([0.0]), np.array([1.0]),
                           weights=weights, score=score)


MODELS: dict[str, Callable[..., ParametricModel]] = {
    "bernoulli": bernoulli,
    "categorical": categorical,
    "truncated_geometric": truncated_geometric,
}


def register_model(name: str, factory: Callable[..., ParametricModel]):
    if name in MODELS:
        raise ValueError(f"model {name!r} already registered")
    MODELS[name] = factory


def _loglik_weights(w: np.ndarray, counts: np.ndarray) -> float:
    obs = counts > 0
    if np.any(w[obs] == 0):
        return -math.inf
    return float(np.sum(counts[obs] * np.log(w[obs])))


def log_likelihood(model: ParametricModel, theta, data: Dataset) -> float:
    """``sum_i counts_i log f(label_i; theta)``; ``-inf`` if an observed label is impossible."""
    return _loglik_weights(model.density(theta).weights, data.counts)


def empirical_kl(model: ParametricModel, theta, data: Dataset) -> float:
    return relative_entropy(data.empirical(), model.density(theta))


def grid_profile(model: ParametricModel, thetas, data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Log likelihood and empirical KL at each parameter vector in ``thetas``.

    The two are evaluated from their own definitions, not from each other.
    """
    thetas = np.asarray(thetas, dtype=np.float64).reshape(len(thetas), model.dim)
    W = np.array([model.weights(model.check(t)) for t in thetas])
    counts = data.counts
    obs = counts > 0
    emp = counts[obs] / data.N
    with np.errstate(divide="ignore"):
        logw = np.log(W[:, obs])
    ll = logw @ counts[obs]
    kl = (np.log(emp) - logw) @ emp
    impossible = np.any(W[:, obs] == 0, axis=1)
    ll[impossible] = -math.inf
    kl[impossible] = math.inf
    return ll, kl


@dataclass(frozen=True, eq=False)
class MleReport:
    model: str
    theta: np.ndarray
    log_likelihood: float
    empirical_kl: float
    method: str
    degenerate: bool = False
    interpretation: str = INTERPRETATION

    def as_dict(self) -> dict:
        from .info import format_extended

        return {
            "model": self.model,
            "theta": [float(t) for t in self.theta],
            "log_likelihood": format_extended(self.log_likelihood),
            "empirical_kl": format_extended(self.empirical_kl),
            "method": self.method,
            "degenerate": self.degenerate,
            "interpretation": self.interpretation,
        }


def _golden(f, a, b, tol):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns the final bracket."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return a, b


def _bisect_root(g, a, b, iters=200):
    """Point where a decreasing ``g`` changes sign inside ``[a, b]``."""
    ga, gb = g(a), g(b)
    if not (ga > 0 > gb):
        return 0.5 * (a + b)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        gm = g(mid)
        if gm > 0:
            a = mid
        elif gm < 0:
            b = mid
        else:
            return mid
    return 0.5 * (a + b)


def _fit_scalar(model: ParametricModel, counts: np.ndarray, tol: float, grid_points: int = 1001):
    lo, hi = float(model.lower[0]), float(model.upper[0])

    def ll(t):
        return _loglik_weights(model.weights(np.array([t])), counts)

    if model.score is not None:
        def dll(t):
            return model.score(np.array([t]), counts)
    else:
        def dll(t):
            h = 1e-6 * max(1.0, abs(t))
            a, b = max(lo, t - h), min(hi, t + h)
            return (ll(b) - ll(a)) / (b - a)

    grid = np.linspace(lo, hi, grid_points)
    vals = np.array([ll(t) for t in grid])
    i = int(np.argmax(vals))
    if i == 0 and dll(min(grid[1], lo + 1e-9)) <= 0:
        return lo
    if i == grid_points - 1 and dll(max(grid[-2], hi - 1e-9)) >= 0:
        return hi
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    a, b = _golden(ll, a, b, tol)
    # widen slightly so the stationary point is strictly inside, then bisect on the score
    pad = 4 * tol
    a, b = max(lo, a - pad), min(hi, b + pad)
    if a <= lo:
        a = lo + 1e-300 if lo == 0.0 else lo
    return _bisect_root(dll, a, b)


def mle_fit(model: ParametricModel, data: Dataset, tol: float = 1e-8,
            on_degenerate: str = "flag") -> MleReport:
    """Maximum likelihood estimate with its empirical KL.

    Closed form where the model provides one, otherwise grid bracketing,
    golden-section search and bisection on the score (one-parameter
    families only).

    ``on_degenerate`` is ``"flag"`` (default) to mark a boundary estimate in
    the report, or ``"raise"`` to raise :class:`DegenerateData` carrying it.
    """
    if data.space.labels != model.space.labels:
        raise ValueError("dataset and model use different outcome spaces")
    counts = data.counts.astype(np.float64)
    if model.closed_form is not None:
        theta = np.asarray(model.closed_form(counts), dtype=np.float64)
        method = "closed-form"
    elif model.dim == 1:
        theta = np.array([_fit_scalar(model, counts, tol)])
        method = "grid+golden+score-bisection"
    else:
        raise NotImplementedError(f"{model.name}: no closed form and more than one parameter")
    theta = model.check(np.clip(theta, model.lower, model.upper))
    report = MleReport(
        model=model.name,
        theta=theta,
        log_likelihood=log_likelihood(model, theta, data),
        empirical_kl=empirical_kl(model, theta, data),
        method=method,
        degenerate=model.on_boundary(theta),
    )
    if report.degenerate and on_degenerate == "raise":
        raise DegenerateData(f"{model.name}: estimate {theta.tolist()} lies on the domain boundary", report)
    return report


def simulate(model: ParametricModel, theta, n: int, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` i.i.d. observations from ``model`` at ``theta`` as a count vector."""
    w = model.density(theta).weights
    return Dataset(model.space, rng.multinomial(n, w))
