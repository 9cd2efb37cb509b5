"""Minimum relative entropy inference on finite outcome spaces."""
from .dist import Distribution, Event, OutcomeSpace, make_distribution, restrict, tv_distance
from .errors import *  # noqa: F401,F403
from .info import information_gain, relative_entropy, shannon_entropy
from .solver import (
    ConstraintSet,
    FeasibilityReport,
    Moment,
    MreSolution,
    check_feasibility,
    dual_gradient,
    dual_objective,
    exponential_tilt,
    solve_mre,
)

__version__ = "0.1.0"
