"""Minimum relative entropy updating under event and moment constraints.

The posterior minimizing ``KL(q || prior)`` subject to ``A q = b``,
``sum(q) = 1`` and ``q_i = 0`` on excluded outcomes is an exponential tilt of
the prior, ``q_i ∝ p_i exp(-lambda . a_i)``. The multipliers are found by
damped Newton iteration on the convex dual

    D(lambda) = log sum_i p_i exp(-lambda . a_i) + lambda . b

whose gradient is the constraint residual ``b - E_q[a]`` and whose Hessian is
the covariance of the moment functions under ``q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .dist import Distribution, Event, OutcomeSpace, _same_space
from .errors import AllMassExcluded, Infeasible, LengthMismatch, NotConverged, UnboundedDual
from .info import relative_entropy

__all__ = [
    "Moment",
    "ConstraintSet",
    "MomentCheck",
    "FeasibilityReport",
    "MreSolution",
    "exponential_tilt",
    "dual_objective",
    "dual_gradient",
    "check_feasibility",
    "solve_mre",
]

# relative slack used to decide that a target sits on a hull bound
BOUNDARY_RTOL = 1e-12
# largest multiplier change per Newton step (infinity norm)
MAX_STEP = 25.0


@dataclass(frozen=True)
class Moment:
    """Linear constraint ``sum_i coeffs[i] * q[i] == target``."""

    coeffs: np.ndarray
    target: float

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=np.float64)
        if a.ndim != 1 or not np.all(np.isfinite(a)):
            raise ValueError("moment coefficients must be a finite vector")
        if not math.isfinite(self.target):
            raise ValueError("moment target must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "target", float(self.target))


@dataclass(frozen=True)
class ConstraintSet:
    """Normalization (implicit), excluded outcomes, and moment equalities."""

    space: OutcomeSpace
    zero_outcomes: Event
    moments: tuple[Moment, ...]

    def __init__(self, space: OutcomeSpace, zeros: Iterable[str] = (), moments: Iterable = ()):
        zero_event = zeros if isinstance(zeros, Event) else Event(space, zeros)
        _same_space(space, zero_event.space)
        if len(zero_event) == space.n:
            raise AllMassExcluded("every outcome is excluded")
        ms = []
        for m in moments:
            if not isinstance(m, Moment):
                a, b = m
                m = Moment(a, b)
            if m.coeffs.shape[0] != space.n:
                raise LengthMismatch(f"moment has {m.coeffs.shape[0]} coefficients, space has {space.n}")
            ms.append(m)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "zero_outcomes", zero_event)
        object.__setattr__(self, "moments", tuple(ms))

    @classmethod
    def mean(cls, space: OutcomeSpace, target: float, zeros: Iterable[str] = ()) -> "ConstraintSet":
        """Single constraint fixing the mean of numeric labels."""
        values = np.array([float(lab) for lab in space.labels])
        return cls(space, zeros, [Moment(values, target)])

    @property
    def m(self) -> int:
        return len(self.moments)

    @property
    def A(self) -> np.ndarray:
        if not self.moments:
            return np.zeros((0, self.space.n))
        return np.vstack([m.coeffs for m in self.moments])

    @property
    def b(self) -> np.ndarray:
        return np.array([m.target for m in self.moments], dtype=np.float64)

    @property
    def allowed(self) -> np.ndarray:
        return ~self.zero_outcomes.mask


@dataclass(frozen=True)
class MomentCheck:
    index: int
    target: float
    lo: float
    hi: float
    status: str  # "strict", "boundary", "constant" or "infeasible"

    def describe(self) -> str:
        if self.status == "infeasible":
            if self.target > self.hi:
                return (f"moment {self.index}: target {self.target!r} exceeds the maximum "
                        f"achievable value {self.hi!r}")
            return (f"moment {self.index}: target {self.target!r} is below the minimum "
                    f"achievable value {self.lo!r}")
        if self.status == "boundary":
            side = "maximum" if self.target >= self.hi else "minimum"
            return f"moment {self.index}: target {self.target!r} equals the {side} achievable value"
        return f"moment {self.index}: target {self.target!r} within [{self.lo!r}, {self.hi!r}]"


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    has_mass: bool
    allowed_mass: float
    moments: tuple[MomentCheck, ...]
    jointly_feasible: bool
    face: np.ndarray = field(repr=False)  # outcomes some feasible posterior can weight
    face_shrunk: bool = False

    @property
    def feasible(self) -> bool:
        return self.has_mass and self.jointly_feasible and all(
            c.status != "infeasible" for c in self.moments)

    @property
    def boundary(self) -> bool:
        return any(c.status == "boundary" for c in self.moments)

    @property
    def status(self) -> str:
        if not self.feasible:
            return "infeasible"
        return "boundary-feasible" if self.boundary or self.face_shrunk else "feasible"

    def describe(self) -> str:
        lines = [f"status: {self.status}"]
        if not self.has_mass:
            lines.append("no prior mass outside the excluded outcomes")
        lines += [c.describe() for c in self.moments]
        if self.has_mass and not self.jointly_feasible and all(c.status != "infeasible" for c in self.moments):
            lines.append("moment constraints are individually achievable but jointly inconsistent")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class MreSolution:
    """Posterior plus its optimality certificate.

    ``multipliers`` holds one entry per moment followed by the normalization
    multiplier. A moment pinned to a hull bound gets an infinite multiplier.
    """

    posterior: Distribution
    multipliers: np.ndarray
    achieved_kl: float
    kkt_residual: float
    iterations: int
    converged: bool = True
    boundary: bool = False
    feasibility: FeasibilityReport | None = field(default=None, repr=False)


def _support_mask(prior: Distribution, constraints: ConstraintSet) -> np.ndarray:
    _same_space(prior.space, constraints.space)
    return (prior.weights > 0) & constraints.allowed


def exponential_tilt(prior: Distribution, constraints: ConstraintSet,
                     lambdas: Sequence[float]) -> Distribution:
    """Normalized ``p_i exp(-sum_j lambda_j a_ji)`` on the allowed prior support."""
    lam = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if lam.shape[0] != constraints.m:
        raise LengthMismatch(f"expected {constraints.m} multipliers, got {lam.shape[0]}")
    support = _support_mask(prior, constraints)
    if not support.any():
        raise AllMassExcluded("prior has no mass outside the excluded outcomes")
    logp = np.log(prior.weights[support])
    q_red, _, _, _ = _kernels.tilt_stats(logp, np.ascontiguousarray(constraints.A[:, support]), lam)
    q = np.zeros(prior.space.n)
    q[support] = q_red
    return Distribution(prior.space, q)


def dual_objective(prior: Distribution, constraints: ConstraintSet, lambdas) -> float:
    """``log Z(lambda) + lambda . b`` over the allowed prior support."""
    lam = np.asarray(lambdas, dtype=np.float64)
    support = _support_mask(prior, constraints)
    s = np.log(prior.weights[support]) - lam @ constraints.A[:, support]
    smax = s.max()
    return float(smax + np.log(np.exp(s - smax).sum()) + lam @ constraints.b)


def dual_gradient(prior: Distribution, constraints: ConstraintSet, lambdas) -> np.ndarray:
    """Analytic gradient of :func:`dual_objective`: ``b - E_q[a]``."""
    lam = np.asarray(lambdas, dtype=np.float64)
    support = _support_mask(prior, constraints)
    _, _, mean, _ = _kernels.tilt_stats(
        np.log(prior.weights[support]), np.ascontiguousarray(constraints.A[:, support]), lam)
    return constraints.b - mean


def _near(x, y):
    return abs(x - y) <= BOUNDARY_RTOL * max(1.0, abs(x), abs(y))


def _max_support_face(A: np.ndarray, b: np.ndarray) -> tuple[bool, np.ndarray]:
    """Largest index set carried by some ``q >= 0, sum q = 1, A q = b``.

    Homogenized LP: with ``x = s q`` free in scale, maximize ``sum t`` subject
    to ``t_i <= x_i``, ``t_i <= 1``; the optimum has ``t_i = 1`` exactly on the
    maximal support.
    """
    m, k = A.shape
    # variables: x (k), t (k), s (1)
    nv = 2 * k + 1
    c = np.concatenate([np.zeros(k), -np.ones(k), [0.0]])
    A_eq = np.zeros((m + 1, nv))
    A_eq[:m, :k] = A
    A_eq[:m, -1] = -b
    A_eq[m, :k] = 1.0
    A_eq[m, -1] = -1.0
    b_eq = np.zeros(m + 1)
    A_ub = np.zeros((k, nv))
    A_ub[:, :k] = -np.eye(k)
    A_ub[:, k:2 * k] = np.eye(k)
    b_ub = np.zeros(k)
    bounds = [(0, None)] * k + [(0, 1)] * k + [(0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return False, np.zeros(k, dtype=bool)
    t = res.x[k:2 * k]
    face = t > 0.5
    return bool(face.any()), face


def check_feasibility(prior: Distribution, constraints: ConstraintSet) -> FeasibilityReport:
    """Diagnose whether the constraints can be met by a posterior on the prior's support."""
    support = _support_mask(prior, constraints)
    mass = float(prior.weights[support].sum())
    n = prior.space.n
    if not support.any():
        return FeasibilityReport(False, 0.0, (), False, np.zeros(n, dtype=bool))

    checks = []
    face = support.copy()
    for j, mom in enumerate(constraints.moments):
        vals = mom.coeffs[support]
        lo, hi = float(vals.min()), float(vals.max())
        b = mom.target
        if _near(lo, hi) and _near(b, lo):
            status = "constant"
        elif _near(b, hi) or _near(b, lo):
            status = "boundary"
            extreme = hi if _near(b, hi) else lo
            face &= np.isclose(mom.coeffs, extreme, rtol=0, atol=BOUNDARY_RTOL * max(1.0, abs(extreme)))
        elif lo < b < hi:
            status = "strict"
        else:
            status = "infeasible"
        checks.append(MomentCheck(j, b, lo, hi, status))

    jointly = all(c.status != "infeasible" for c in checks)
    if jointly and constraints.m >= 2:
        jointly, lp_face = _max_support_face(constraints.A[:, support], constraints.b)
        if jointly:
            face = np.zeros(n, dtype=bool)
            face[np.flatnonzero(support)[lp_face]] = True
    elif not jointly:
        face = np.zeros(n, dtype=bool)
    shrunk = bool(jointly and (face != support).any())
    return FeasibilityReport(True, mass, tuple(checks), jointly, face, shrunk)


def _newton(logp, A, b, tol, max_iter):
    """Minimize the dual from lambda = 0. Returns the best iterate (lam, q, log_z, iterations)."""
    m = A.shape[0]
    lam = np.zeros(m)
    q, log_z, mean, cov = _kernels.tilt_stats(logp, A, lam)
    f = log_z + lam @ b
    g = b - mean
    best = (np.max(np.abs(g)) if m else 0.0, lam, q, log_z)
    target = 1e-2 * tol
    it = 0
    while it < max_iter:
        gmax = float(np.max(np.abs(g))) if m else 0.0
        if gmax <= target:
            break
        # cov is PSD; lstsq gives the min-norm step when moments are collinear
        newton = np.linalg.lstsq(cov, -g, rcond=1e-14)[0]
        accepted = False
        for step in (newton, -g):
            slope = g @ step
            if not np.all(np.isfinite(step)) or slope >= 0:
                continue
            size = np.max(np.abs(step))
            if size > MAX_STEP:
                step = step * (MAX_STEP / size)
                slope = g @ step
            t = 1.0
            while t >= 1e-14:
                lam_new = lam + t * step
                q_new, log_z_new, mean_new, cov_new = _kernels.tilt_stats(logp, A, lam_new)
                f_new = log_z_new + lam_new @ b
                if f_new <= f + 1e-4 * t * slope:
                    accepted = True
                    break
                # near the optimum the decrease drowns in rounding of f; judge by the gradient
                if (abs(f_new - f) <= 64 * np.finfo(float).eps * max(1.0, abs(f))
                        and np.max(np.abs(b - mean_new)) < gmax):
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        it += 1
        if not accepted:
            break
        lam, q, log_z, mean, cov, f = lam_new, q_new, log_z_new, mean_new, cov_new, f_new
        g = b - mean
        gmax = float(np.max(np.abs(g)))
        if gmax < best[0]:
            best = (gmax, lam, q, log_z)
    _, lam, q, log_z = best
    return lam, q, log_z, it


def solve_mre(prior: Distribution, constraints: ConstraintSet, tol: float = 1e-10,
              max_iter: int = 200) -> MreSolution:
    """I-projection of ``prior`` onto the constraint set.

    Parameters
    ----------
    prior : Distribution
    constraints : ConstraintSet
    tol : float
        Bound on the KKT residual (constraint violation plus stationarity gap).
    max_iter : int
        Newton iterations allowed.

    Returns
    -------
    MreSolution

    Raises
    ------
    AllMassExcluded, UnboundedDual, Infeasible
        When no admissible posterior exists; the feasibility report is
        attached as ``report``.
    NotConverged
        The best iterate is attached as ``solution``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    report = check_feasibility(prior, constraints)
    if not report.has_mass:
        raise AllMassExcluded("prior has no mass outside the excluded outcomes", report)
    bad = [c for c in report.moments if c.status == "infeasible"]
    if bad:
        raise UnboundedDual("; ".join(c.describe() for c in bad), report)
    if not report.jointly_feasible:
        raise Infeasible(report.describe(), report)

    n, m = prior.space.n, constraints.m
    A_full, b_full = constraints.A, constraints.b
    face = report.face
    A_face = A_full[:, face]

    # moments constant on the face are satisfied automatically
    lam_full = np.zeros(m)
    active = []
    for j in range(m):
        row = A_face[j]
        if np.ptp(row) <= BOUNDARY_RTOL * max(1.0, np.abs(row).max()):
            if report.moments[j].status == "boundary":
                chk = report.moments[j]
                lam_full[j] = -math.inf if _near(chk.target, chk.hi) else math.inf
        else:
            active.append(j)
    A = np.ascontiguousarray(A_face[active])
    b = b_full[active]

    logp = np.log(prior.weights[face])
    lam, q_face, log_z, iterations = _newton(logp, A, b, tol, max_iter)
    lam_full[active] = lam

    q = np.zeros(n)
    q[face] = q_face
    posterior = Distribution(prior.space, q)

    constraint_gap = abs(float(q.sum()) - 1.0)
    if m:
        constraint_gap = max(constraint_gap, float(np.max(np.abs(A_full @ q - b_full))))
    # stationarity of the Lagrangian: log(q/p) + 1 + lambda.a + nu = 0 on the support
    nu = log_z - 1.0
    on = q_face > 0
    station = np.log(q_face[on]) - logp[on] + 1.0 + (lam @ A)[on] + nu
    station_gap = float(np.max(np.abs(station))) if station.size else 0.0
    residual = constraint_gap + station_gap

    sol = MreSolution(
        posterior=posterior,
        multipliers=np.concatenate([lam_full, [nu]]),
        achieved_kl=relative_entropy(posterior, prior),
        kkt_residual=residual,
        iterations=iterations,
        converged=residual <= tol,
        boundary=report.status == "boundary-feasible",
        feasibility=report,
    )
    if not sol.converged:
        raise NotConverged(
            f"KKT residual {residual:.3e} above tol {tol:.1e} after {iterations} iterations", sol)
    return sol
