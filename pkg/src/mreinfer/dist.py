"""Outcome spaces, distributions and events over finite label sets."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    LengthMismatch,
    NegativeWeight,
    SpaceMismatch,
    ZeroProbabilityEvent,
    ZeroTotal,
)

__all__ = [
    "OutcomeSpace",
    "Distribution",
    "Event",
    "make_distribution",
    "restrict",
    "tv_distance",
    "NORMALIZATION_TOL",
]

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class OutcomeSpace:
    """Ordered, duplicate-free set of outcome labels."""

    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(label) for label in labels)
        if not labels:
            raise ValueError("an outcome space needs at least one label")
        if len(set(labels)) != len(labels):
            raise ValueError("outcome labels must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown outcome label {label!r}") from None

    def mask(self, members: Iterable[str]) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        for label in members:
            m[self.index(label)] = True
        return m

    @classmethod
    def range(cls, lo: int, hi: int) -> "OutcomeSpace":
        """Integer labels ``lo..hi`` inclusive, e.g. the faces of a die."""
        return cls(str(v) for v in range(lo, hi + 1))


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


class Distribution:
    """Probability vector aligned to an :class:`OutcomeSpace`.

    Direct construction validates but does not renormalize; use
    :func:`make_distribution` for raw weights.
    """

    __slots__ = ("space", "weights")

    def __init__(self, space: OutcomeSpace, weights):
        w = _frozen(weights)
        if w.ndim != 1 or w.shape[0] != space.n:
            raise LengthMismatch(f"expected {space.n} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise NegativeWeight("weights must be nonnegative")
        total = float(w.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("Distribution is immutable")

    def __repr__(self):
        body = ", ".join(f"{lab}={w:.6g}" for lab, w in zip(self.space.labels, self.weights))
        return f"Distribution({body})"

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.space.labels, self.weights.tobytes()))

    def __getitem__(self, label: str) -> float:
        return float(self.weights[self.space.index(label)])

    @property
    def support(self) -> np.ndarray:
        return self.weights > 0

    def prob(self, event: "Event") -> float:
        _same_space(self.space, event.space)
        return float(self.weights[event.mask].sum())

    def as_dict(self) -> dict:
        return {"labels": list(self.space.labels), "weights": [float(w) for w in self.weights]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "Distribution":
        extra = set(obj) - {"labels", "weights"}
        if extra:
            raise ValueError(f"unknown distribution fields: {sorted(extra)}")
        return make_distribution(OutcomeSpace(obj["labels"]), obj["weights"])

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Event:
    """A subset of an outcome space. May be empty."""

    space: OutcomeSpace
    members: frozenset

    def __init__(self, space: OutcomeSpace, members: Iterable[str]):
        members = frozenset(str(m) for m in members)
        for m in members:
            if m not in space:
                raise KeyError(f"event member {m!r} is not an outcome label")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "members", members)

    @property
    def mask(self) -> np.ndarray:
        return self.space.mask(self.members)

    def complement(self) -> "Event":
        return Event(self.space, (lab for lab in self.space.labels if lab not in self.members))

    def __and__(self, other: "Event") -> "Event":
        _same_space(self.space, other.space)
        return Event(self.space, self.members & other.members)

    def __len__(self):
        return len(self.members)

    def ordered(self) -> list[str]:
        return [lab for lab in self.space.labels if lab in self.members]


def _same_space(a: OutcomeSpace, b: OutcomeSpace):
    if a is not b and a.labels != b.labels:
        raise SpaceMismatch("operands live on different outcome spaces")


def make_distribution(space: OutcomeSpace, raw_weights: Sequence[float]) -> Distribution:
    """Normalize nonnegative raw weights into a :class:`Distribution`."""
    w = np.asarray(raw_weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != space.n:
        raise LengthMismatch(f"expected {space.n} weights, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight("weights must be nonnegative")
    total = w.sum()
    if total == 0:
        raise ZeroTotal("weights sum to zero")
    return Distribution(space, w / total)


def restrict(d: Distribution, e: Event) -> Distribution:
    """Condition ``d`` on event ``e`` (zero outside, renormalize inside)."""
    _same_space(d.space, e.space)
    mask = e.mask
    if not np.any(d.weights[~mask]):
        if not np.any(d.weights[mask]):
            raise ZeroProbabilityEvent(f"event {sorted(e.members)} has zero probability")
        # already supported on e; conditioning is the identity
        return d
    mass = d.weights[mask].sum()
    if mass <= 0:
        raise ZeroProbabilityEvent(f"event {sorted(e.members)} has zero probability")
    w = np.where(mask, d.weights, 0.0) / mass
    return Distribution(d.space, w)


def tv_distance(d1: Distribution, d2: Distribution) -> float:
    _same_space(d1.space, d2.space)
    return 0.5 * float(np.abs(d1.weights - d2.weights).sum())
