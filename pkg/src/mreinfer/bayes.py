"""Bayesian conditioning, in closed form and as a constrained MRE problem."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dist import Distribution, Event, OutcomeSpace, make_distribution, restrict, tv_distance
from .errors import SpaceMismatch, ZeroProbabilityEvent
from .info import relative_entropy
from .solver import ConstraintSet, solve_mre

__all__ = [
    "JointPrior",
    "UpdateStep",
    "UpdateChain",
    "bayes_closed_form",
    "bayes_via_mre",
    "sequential_update",
]


@dataclass(frozen=True, eq=False)
class JointPrior:
    """Prior over joint propositions, partitioned into hypotheses.

    ``hypotheses`` maps each hypothesis label to the joint labels that make it
    up; together they must cover the joint space exactly once.
    """

    prior: Distribution
    hypotheses: tuple[tuple[str, tuple[str, ...]], ...]

    def __init__(self, prior: Distribution, hypotheses: Mapping[str, Sequence[str]]):
        seen: dict[str, str] = {}
        for h, cells in hypotheses.items():
            for c in cells:
                if c not in prior.space:
                    raise KeyError(f"hypothesis {h!r} refers to unknown joint label {c!r}")
                if c in seen:
                    raise ValueError(f"joint label {c!r} belongs to both {seen[c]!r} and {h!r}")
                seen[c] = h
        missing = [lab for lab in prior.space.labels if lab not in seen]
        if missing:
            raise ValueError(f"joint labels not covered by any hypothesis: {missing}")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "hypotheses",
                           tuple((str(h), tuple(cells)) for h, cells in hypotheses.items()))

    @property
    def space(self) -> OutcomeSpace:
        return self.prior.space

    @property
    def hypothesis_space(self) -> OutcomeSpace:
        return OutcomeSpace(h for h, _ in self.hypotheses)

    def event(self, members) -> Event:
        return members if isinstance(members, Event) else Event(self.space, members)

    def prob(self, evidence) -> float:
        return self.prior.prob(self.event(evidence))

    def marginal_matrix(self) -> np.ndarray:
        """0/1 matrix mapping joint weights onto hypothesis weights."""
        M = np.zeros((len(self.hypotheses), self.space.n))
        for i, (_, cells) in enumerate(self.hypotheses):
            for c in cells:
                M[i, self.space.index(c)] = 1.0
        return M

    def marginalize(self, joint: Distribution) -> Distribution:
        return Distribution(self.hypothesis_space, self.marginal_matrix() @ joint.weights)

    @classmethod
    def from_table(cls, names: Sequence[str], p_and_b: Sequence[float],
                   p_and_not_b: Sequence[float]) -> tuple["JointPrior", Event]:
        """Build the ``Ai&B`` / ``Ai&~B`` space from two columns of joint weights.

        Returns the joint prior and the evidence event ``B``.
        """
        labels, weights, hyps = [], [], {}
        for name, pb, pnb in zip(names, p_and_b, p_and_not_b, strict=True):
            labels += [f"{name}&B", f"{name}&~B"]
            weights += [pb, pnb]
            hyps[name] = (f"{name}&B", f"{name}&~B")
        space = OutcomeSpace(labels)
        jp = cls(make_distribution(space, weights), hyps)
        return jp, Event(space, (f"{n}&B" for n in names))


def bayes_closed_form(joint: JointPrior, evidence) -> Distribution:
    """Posterior over hypotheses: ``p(A_i and B) / p(B)``."""
    b_mask = joint.event(evidence).mask
    w = joint.prior.weights
    p_b = w[b_mask].sum()
    if p_b <= 0:
        raise ZeroProbabilityEvent("evidence has zero prior probability")
    post = np.zeros(len(joint.hypotheses))
    for i, (_, cells) in enumerate(joint.hypotheses):
        idx = [joint.space.index(c) for c in cells]
        post[i] = sum(w[j] for j in idx if b_mask[j])
    return Distribution(joint.hypothesis_space, post / p_b)


def bayes_via_mre(joint: JointPrior, evidence, tol: float = 1e-10) -> Distribution:
    """Posterior over hypotheses from the MRE problem that excludes the complement of B."""
    ev = joint.event(evidence)
    if joint.prior.prob(ev) <= 0:
        raise ZeroProbabilityEvent("evidence has zero prior probability")
    sol = solve_mre(joint.prior, ConstraintSet(joint.space, ev.complement()), tol=tol)
    return joint.marginalize(sol.posterior)


def bayes_gap(joint: JointPrior, evidence, tol: float = 1e-10) -> float:
    """Total variation between the two routes."""
    return tv_distance(bayes_closed_form(joint, evidence), bayes_via_mre(joint, evidence, tol))


@dataclass(frozen=True)
class UpdateStep:
    evidence: Event
    posterior: Distribution
    step_kl: float


@dataclass(frozen=True)
class UpdateChain:
    prior: Distribution
    steps: tuple[UpdateStep, ...]

    @property
    def final(self) -> Distribution:
        return self.steps[-1].posterior if self.steps else self.prior

    @property
    def total_kl(self) -> float:
        return float(sum(s.step_kl for s in self.steps))


def sequential_update(prior: Distribution, evidences: Sequence) -> UpdateChain:
    """Condition on each event in turn, recording the KL cost of every step.

    Evidence that is not nested in the running support is allowed as long as
    the running intersection keeps positive mass; the recorded event is that
    intersection.
    """
    current = prior
    running = Event(prior.space, prior.space.labels)
    steps = []
    for k, ev in enumerate(evidences):
        if not isinstance(ev, Event):
            ev = Event(prior.space, ev)
        if ev.space.labels != prior.space.labels:
            raise SpaceMismatch(f"evidence {k} is on a different space")
        running = running & ev
        if current.prob(running) <= 0:
            raise ZeroProbabilityEvent(
                f"step {k}: evidence {sorted(ev.members)} has zero probability given earlier evidence",
                step=k)
        nxt = restrict(current, running)
        steps.append(UpdateStep(running, nxt, relative_entropy(nxt, current)))
        current = nxt
    return UpdateChain(prior, tuple(steps))
