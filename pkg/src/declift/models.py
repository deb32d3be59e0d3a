"""Core model types: MDPs, POMDPs, and their multi-agent ground form.

All models are plain frozen dataclasses over labels (strings) so they can
be built by hand in tests and round-tripped through the interchange format.
Transition and sensing tables are sparse maps with explicit keys; only the
rows themselves (distributions over states, or over observation symbols)
are dense vectors.

Probability rows must carry unit mass within PROB_TOL.  Rows that are off
by more than EXACT_SUM_TOL but still within PROB_TOL are divided by their
sum when they enter through the parser; validation merely reports, so that
broken models can be constructed and inspected.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapacityExceeded, ZeroProbabilityObservation

PROB_TOL = 1e-9
EXACT_SUM_TOL = 1e-12
DEFAULT_JOINT_CAP = 10_000_000

# action / observation / agent labels end up inside comma- and pipe-joined
# serialized keys, so they must stay clear of the delimiter characters
LABEL_RE = re.compile(r"[^\s,|\[\]]+")


def label_ok(label: str) -> bool:
    return isinstance(label, str) and bool(LABEL_RE.fullmatch(label))


@dataclass(frozen=True)
class StateSpace:
    """Finite set of state labels; order is the canonical index order."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) == 0:
            raise ValueError("state space must be non-empty")
        if len(set(labels)) != len(labels):
            raise ValueError("state labels must be unique")
        if not all(isinstance(s, str) and s for s in labels):
            raise ValueError("state labels must be non-empty strings")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _freeze_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty 1-d row of probabilities")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Dense probability row over an implicitly indexed finite range."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _freeze_array(self.probs))

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        return isinstance(other, DiscreteDistribution) and np.array_equal(
            self.probs, other.probs
        )

    def mass(self) -> float:
        return math.fsum(self.probs.tolist())

    def deviation(self) -> float:
        """Absolute distance of the total mass from 1."""
        return abs(self.mass() - 1.0)


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability row over a state space."""

    state_space: StateSpace
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _freeze_array(self.probs))

    def __eq__(self, other):
        return (
            isinstance(other, Belief)
            and self.state_space == other.state_space
            and np.array_equal(self.probs, other.probs)
        )

    def mass(self) -> float:
        return math.fsum(self.probs.tolist())


def canonical_row(values: Sequence[float]) -> tuple[np.ndarray | None, str | None]:
    """Coerce a row to canonical probabilities.

    Returns (probs, None) on success.  Rows with mass within PROB_TOL of 1
    are accepted; if the mass is off by more than EXACT_SUM_TOL the row is
    divided by its mass, otherwise it is kept bit-for-bit as written.  On
    failure returns (None, reason).
    """
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        return None, "empty row"
    if not np.all(np.isfinite(arr)):
        return None, "non-finite entry"
    if np.any(arr < 0.0):
        return None, "negative entry"
    mass = math.fsum(arr.tolist())
    deviation = abs(mass - 1.0)
    if deviation > PROB_TOL:
        return None, f"mass {mass!r} is off by more than {PROB_TOL}"
    if deviation > EXACT_SUM_TOL:
        arr = arr / mass
    arr.flags.writeable = False
    return arr, None


@dataclass(frozen=True)
class Mdp:
    """Fully observable single-agent model with per-state action ranges.

    transition maps (state, action) to a distribution over next states;
    a pair is expected to be present exactly when the action is declared
    for the state.  reward is a function of the state alone.
    """

    states: StateSpace
    actions: dict[str, tuple[str, ...]]
    transition: dict[tuple[str, str], DiscreteDistribution]
    reward: dict[str, float]
    discount: float

    def action_union(self) -> tuple[str, ...]:
        """All actions in first-appearance order across states."""
        seen: dict[str, None] = {}
        for state in self.states:
            for a in self.actions.get(state, ()):
                seen.setdefault(a, None)
        return tuple(seen)


@dataclass(frozen=True)
class Pomdp(Mdp):
    """MDP whose state is only seen through a noisy sensor."""

    observations: tuple[str, ...] = ()
    sensor: dict[str, DiscreteDistribution] = field(default_factory=dict)


@dataclass(frozen=True)
class GroundDecPomdp:
    """Team model: one action and one observation per agent per step.

    Joint actions and observations are tuples indexed by agent position.
    transition rows are distributions over states; sensor rows are sparse
    maps from joint observation tuples to probability (missing means 0).
    The team shares a single state-only reward and an initial belief.
    """

    agents: tuple[str, ...]
    states: StateSpace
    actions: dict[str, tuple[str, ...]]
    observations: dict[str, tuple[str, ...]]
    transition: dict[tuple[str, tuple[str, ...]], DiscreteDistribution]
    sensor: dict[str, dict[tuple[str, ...], float]]
    reward: dict[str, float]
    discount: float
    initial_belief: Belief


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self):
        return f"[{self.code}] {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def _check_range(out, owner, kind, labels):
    if len(labels) == 0:
        out.append(Violation("range", f"{owner} declares no {kind}"))
        return
    if len(set(labels)) != len(labels):
        out.append(Violation("range", f"{owner} has duplicate {kind}"))
    for lbl in labels:
        if not label_ok(lbl):
            out.append(Violation("label", f"{owner} {kind} label {lbl!r} is not allowed"))


def _check_row(out, name, dist: DiscreteDistribution, width: int):
    if len(dist) != width:
        out.append(Violation("row", f"{name} has {len(dist)} entries, expected {width}"))
        return
    arr = dist.probs
    if not np.all(np.isfinite(arr)):
        out.append(Violation("row", f"{name} contains a non-finite entry"))
        return
    if np.any(arr < 0.0):
        out.append(Violation("row", f"{name} contains a negative entry"))
    if dist.deviation() > PROB_TOL:
        out.append(
            Violation("normalization", f"{name} sums to {dist.mass()!r}, expected 1")
        )


def _check_sparse_row(out, name, row: dict, keys_ok) -> None:
    for key, value in row.items():
        if not keys_ok(key):
            out.append(Violation("key", f"{name} has out-of-range key {key!r}"))
        if not (isinstance(value, (int, float)) and math.isfinite(value)):
            out.append(Violation("row", f"{name} entry {key!r} is not a finite number"))
            return
        if value < 0.0:
            out.append(Violation("row", f"{name} entry {key!r} is negative"))
    mass = math.fsum(float(v) for v in row.values())
    if abs(mass - 1.0) > PROB_TOL:
        out.append(Violation("normalization", f"{name} sums to {mass!r}, expected 1"))


def _check_reward(out, model):
    for state in model.states:
        if state not in model.reward:
            out.append(Violation("reward", f"no reward for state {state!r}"))
        else:
            value = model.reward[state]
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                out.append(Violation("reward", f"reward for {state!r} is not finite"))
    for state in model.reward:
        if state not in model.states.labels:
            out.append(Violation("reward", f"reward for unknown state {state!r}"))


def _check_discount(out, model):
    if not (isinstance(model.discount, (int, float)) and 0.0 < model.discount <= 1.0):
        out.append(
            Violation("discount", f"discount {model.discount!r} outside (0, 1]")
        )


def _check_belief(out, belief: Belief, states: StateSpace):
    if belief.state_space != states:
        out.append(Violation("belief", "initial belief indexes a different state space"))
        return
    arr = belief.probs
    if arr.size != len(states):
        out.append(Violation("belief", "initial belief has the wrong dimension"))
        return
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        out.append(Violation("belief", "initial belief entries must be finite and non-negative"))
    if abs(belief.mass() - 1.0) > PROB_TOL:
        out.append(Violation("belief", f"initial belief sums to {belief.mass()!r}"))


def _validate_mdp(model: Mdp, out: list[Violation]):
    _check_discount(out, model)
    _check_reward(out, model)
    for state in model.states:
        if state not in model.actions:
            out.append(Violation("range", f"state {state!r} declares no action range"))
            continue
        _check_range(out, f"state {state!r}", "actions", model.actions[state])
    for state in model.actions:
        if state not in model.states.labels:
            out.append(Violation("range", f"action range for unknown state {state!r}"))
    declared = {
        (s, a) for s in model.states for a in model.actions.get(s, ())
    }
    for key in declared:
        if key not in model.transition:
            out.append(Violation("missing-row", f"no transition row for {key!r}"))
    for key, dist in model.transition.items():
        if key not in declared:
            out.append(Violation("undeclared-row", f"transition row for undeclared {key!r}"))
        _check_row(out, f"transition row {key!r}", dist, len(model.states))


def _validate_pomdp(model: Pomdp, out: list[Violation]):
    _validate_mdp(model, out)
    _check_range(out, "model", "observations", model.observations)
    for state in model.states:
        if state not in model.sensor:
            out.append(Violation("missing-row", f"no sensor row for state {state!r}"))
    for state, dist in model.sensor.items():
        if state not in model.states.labels:
            out.append(Violation("undeclared-row", f"sensor row for unknown state {state!r}"))
            continue
        _check_row(out, f"sensor row {state!r}", dist, len(model.observations))


def _validate_ground(model: GroundDecPomdp, out: list[Violation], cap: int):
    _check_discount(out, model)
    _check_reward(out, model)
    if len(model.agents) == 0:
        out.append(Violation("range", "no agents declared"))
        return
    if len(set(model.agents)) != len(model.agents):
        out.append(Violation("range", "duplicate agent names"))
    for agent in model.agents:
        if not label_ok(agent):
            out.append(Violation("label", f"agent name {agent!r} is not allowed"))
        _check_range(out, f"agent {agent!r}", "actions", model.actions.get(agent, ()))
        _check_range(
            out, f"agent {agent!r}", "observations", model.observations.get(agent, ())
        )
    action_ranges = [model.actions.get(a, ()) for a in model.agents]
    obs_ranges = [model.observations.get(a, ()) for a in model.agents]

    def action_tuple_ok(joint):
        return (
            isinstance(joint, tuple)
            and len(joint) == len(model.agents)
            and all(v in r for v, r in zip(joint, action_ranges))
        )

    def obs_tuple_ok(joint):
        return (
            isinstance(joint, tuple)
            and len(joint) == len(model.agents)
            and all(v in r for v, r in zip(joint, obs_ranges))
        )

    for (state, joint), dist in model.transition.items():
        name = f"transition row ({state!r}, {joint!r})"
        if state not in model.states.labels:
            out.append(Violation("undeclared-row", f"{name}: unknown state"))
        if not action_tuple_ok(joint):
            out.append(Violation("key", f"{name}: joint action outside the ranges"))
        _check_row(out, name, dist, len(model.states))

    n_joint_actions = math.prod(len(r) for r in action_ranges)
    if n_joint_actions <= cap:
        for state in model.states:
            for joint in itertools.product(*action_ranges):
                if (state, joint) not in model.transition:
                    out.append(
                        Violation(
                            "missing-row",
                            f"no transition row for ({state!r}, {joint!r})",
                        )
                    )

    for state in model.states:
        if state not in model.sensor:
            out.append(Violation("missing-row", f"no sensor row for state {state!r}"))
    for state, row in model.sensor.items():
        if state not in model.states.labels:
            out.append(Violation("undeclared-row", f"sensor row for unknown state {state!r}"))
            continue
        _check_sparse_row(out, f"sensor row {state!r}", row, obs_tuple_ok)

    _check_belief(out, model.initial_belief, model.states)


def validate_model(model, cap: int = DEFAULT_JOINT_CAP) -> ValidationReport:
    """Collect every violated invariant of a model into a report.

    Nothing is raised and nothing is repaired; an empty report means the
    model is safe for the solvers.  For team models, transition-row
    completeness is only enumerable when the joint action space fits under
    `cap`; beyond that the present rows are still checked individually.
    """
    out: list[Violation] = []
    from . import lifting  # local import, lifting builds on this module

    if isinstance(model, Pomdp):
        _validate_pomdp(model, out)
    elif isinstance(model, Mdp):
        _validate_mdp(model, out)
    elif isinstance(model, GroundDecPomdp):
        _validate_ground(model, out, cap)
    elif isinstance(model, lifting.LiftedDecPomdp):
        lifting.validate_lifted(model, out, cap)
    else:
        out.append(Violation("kind", f"unsupported model type {type(model).__name__}"))
    return ValidationReport(out)


def belief_update(model: Pomdp, belief: Belief, action: str, observation: str) -> Belief:
    """Bayes filter step: condition the predicted belief on an observation.

    new(s') is proportional to sensor(observation | s') times the one-step
    push-forward of `belief` under `action`.  Missing transition rows
    contribute nothing.  Raises ZeroProbabilityObservation when the
    observation has zero prior probability under the predicted belief.
    """
    n = len(model.states)
    predicted = np.zeros(n)
    for i, state in enumerate(model.states):
        weight = belief.probs[i]
        if weight == 0.0:
            continue
        row = model.transition.get((state, action))
        if row is not None:
            predicted += weight * row.probs
    obs_index = model.observations.index(observation)
    numer = np.array(
        [model.sensor[s].probs[obs_index] for s in model.states]
    ) * predicted
    norm = math.fsum(numer.tolist())
    if norm <= 0.0:
        raise ZeroProbabilityObservation(
            f"observation {observation!r} has zero probability after {action!r}"
        )
    return Belief(model.states, numer / norm)


def joint_space_size(model: GroundDecPomdp, kind: str) -> int:
    ranges = _joint_ranges(model, kind)
    return math.prod(len(r) for r in ranges)


def _joint_ranges(model: GroundDecPomdp, kind: str):
    if kind == "actions":
        return [model.actions[a] for a in model.agents]
    if kind == "observations":
        return [model.observations[a] for a in model.agents]
    raise ValueError(f"kind must be 'actions' or 'observations', got {kind!r}")


def joint_space(
    model: GroundDecPomdp, kind: str, cap: int = DEFAULT_JOINT_CAP
) -> Iterator[tuple[str, ...]]:
    """All joint action or observation tuples, in lexicographic order.

    Lexicographic means itertools.product over the per-agent ranges in
    declared agent order, each range in its declared order.  The full
    product size is checked against `cap` before anything is yielded.
    """
    ranges = _joint_ranges(model, kind)
    size = math.prod(len(r) for r in ranges)
    if size > cap:
        raise CapacityExceeded(
            f"joint {kind} space of size {size} exceeds the cap {cap}",
            measured=size,
            cap=cap,
        )
    return itertools.product(*ranges)
