"""Core model type checks: validation reporting and the belief filter."""

import itertools
import math

import numpy as np
import pytest

from declift.errors import CapacityExceeded, ZeroProbabilityObservation
from declift.models import (
    Belief,
    DiscreteDistribution,
    GroundDecPomdp,
    Mdp,
    Pomdp,
    StateSpace,
    belief_update,
    canonical_row,
    joint_space,
    joint_space_size,
    validate_model,
)


def two_state_pomdp():
    states = StateSpace(("healthy", "ill"))
    return Pomdp(
        states=states,
        actions={"healthy": ("wait", "probe"), "ill": ("wait", "probe")},
        transition={
            ("healthy", "wait"): DiscreteDistribution([0.7, 0.3]),
            ("healthy", "probe"): DiscreteDistribution([1.0, 0.0]),
            ("ill", "wait"): DiscreteDistribution([0.2, 0.8]),
            ("ill", "probe"): DiscreteDistribution([0.0, 1.0]),
        },
        reward={"healthy": 1.0, "ill": -1.0},
        discount=0.9,
        observations=("clear", "marker"),
        sensor={
            "healthy": DiscreteDistribution([0.9, 0.1]),
            "ill": DiscreteDistribution([0.25, 0.75]),
        },
    )


def test_belief_update_matches_direct_bayes():
    model = two_state_pomdp()
    belief = Belief(model.states, np.array([0.5, 0.5]))
    updated = belief_update(model, belief, "wait", "clear")

    # oracle: write the numerator and normalizer out by hand
    predicted = [0.5 * 0.7 + 0.5 * 0.2, 0.5 * 0.3 + 0.5 * 0.8]
    numer = [0.9 * predicted[0], 0.25 * predicted[1]]
    norm = numer[0] + numer[1]
    expected = [numer[0] / norm, numer[1] / norm]
    assert np.allclose(updated.probs, expected, atol=1e-12)
    assert abs(updated.mass() - 1.0) < 1e-12


def test_belief_update_exhaustive_consistency():
    # over every (action, observation) pair and a sweep of beliefs, the
    # filter must agree with the brute-force Bayes rule
    model = two_state_pomdp()
    for t in np.linspace(0.0, 1.0, 11):
        belief = Belief(model.states, np.array([t, 1.0 - t]))
        for action in ("wait", "probe"):
            for obs in ("clear", "marker"):
                pred = np.zeros(2)
                for i, s in enumerate(model.states):
                    pred += belief.probs[i] * model.transition[(s, action)].probs
                o = model.observations.index(obs)
                numer = np.array(
                    [model.sensor[s].probs[o] for s in model.states]
                ) * pred
                if numer.sum() == 0.0:
                    with pytest.raises(ZeroProbabilityObservation):
                        belief_update(model, belief, action, obs)
                else:
                    updated = belief_update(model, belief, action, obs)
                    assert np.allclose(updated.probs, numer / numer.sum(), atol=1e-12)


def test_belief_update_zero_probability_observation():
    model = two_state_pomdp()
    belief = Belief(model.states, np.array([1.0, 0.0]))
    # probing from a certainly-healthy belief keeps the state healthy, and
    # a "marker" observation still has mass 0.1 there; make it impossible
    impossible = Pomdp(
        states=model.states,
        actions=model.actions,
        transition=model.transition,
        reward=model.reward,
        discount=model.discount,
        observations=model.observations,
        sensor={
            "healthy": DiscreteDistribution([1.0, 0.0]),
            "ill": DiscreteDistribution([0.25, 0.75]),
        },
    )
    with pytest.raises(ZeroProbabilityObservation):
        belief_update(impossible, belief, "probe", "marker")


def test_validate_clean_pomdp():
    assert validate_model(two_state_pomdp()).ok


def test_validate_reports_normalization_with_offender():
    states = StateSpace(("a", "b"))
    model = Mdp(
        states=states,
        actions={"a": ("go",), "b": ("go",)},
        transition={
            ("a", "go"): DiscreteDistribution([0.6, 0.3]),  # mass 0.9
            ("b", "go"): DiscreteDistribution([0.5, 0.5]),
        },
        reward={"a": 0.0, "b": 1.0},
        discount=0.9,
    )
    report = validate_model(model)
    assert not report.ok
    assert report.codes() == ["normalization"]
    assert "('a', 'go')" in str(report)


def test_validate_reports_missing_and_undeclared_rows():
    states = StateSpace(("a", "b"))
    model = Mdp(
        states=states,
        actions={"a": ("go", "stay"), "b": ("go",)},
        transition={
            ("a", "go"): DiscreteDistribution([1.0, 0.0]),
            ("b", "go"): DiscreteDistribution([0.0, 1.0]),
            ("b", "stay"): DiscreteDistribution([0.0, 1.0]),
        },
        reward={"a": 0.0, "b": 0.0},
        discount=1.0,
    )
    report = validate_model(model)
    codes = report.codes()
    assert "missing-row" in codes  # ('a', 'stay') has no row
    assert "undeclared-row" in codes  # ('b', 'stay') is not declared


def test_validate_discount_and_reward():
    states = StateSpace(("a",))
    model = Mdp(
        states=states,
        actions={"a": ("go",)},
        transition={("a", "go"): DiscreteDistribution([1.0])},
        reward={},
        discount=1.5,
    )
    codes = validate_model(model).codes()
    assert "discount" in codes
    assert "reward" in codes


def tiny_ground(sensor_row=None):
    states = StateSpace(("s0", "s1"))
    agents = ("a0", "a1")
    actions = {"a0": ("x", "y"), "a1": ("x", "y")}
    observations = {"a0": ("o", "n"), "a1": ("o", "n")}
    transition = {}
    for s in states:
        for joint in itertools.product(("x", "y"), repeat=2):
            transition[(s, joint)] = DiscreteDistribution([0.5, 0.5])
    if sensor_row is None:
        sensor_row = {
            ("o", "o"): 0.25,
            ("o", "n"): 0.25,
            ("n", "o"): 0.25,
            ("n", "n"): 0.25,
        }
    sensor = {s: dict(sensor_row) for s in states}
    return GroundDecPomdp(
        agents=agents,
        states=states,
        actions=actions,
        observations=observations,
        transition=transition,
        sensor=sensor,
        reward={"s0": 0.0, "s1": 1.0},
        discount=0.95,
        initial_belief=Belief(states, np.array([1.0, 0.0])),
    )


def test_validate_clean_ground():
    assert validate_model(tiny_ground()).ok


def test_validate_ground_bad_sensor_key_and_mass():
    model = tiny_ground(sensor_row={("o", "o"): 0.5, ("o", "zzz"): 0.2})
    codes = validate_model(model).codes()
    assert "key" in codes
    assert "normalization" in codes


def test_joint_space_order_and_size():
    model = tiny_ground()
    assert joint_space_size(model, "actions") == 4
    tuples = list(joint_space(model, "actions"))
    assert tuples == [("x", "x"), ("x", "y"), ("y", "x"), ("y", "y")]
    with pytest.raises(CapacityExceeded):
        joint_space(model, "observations", cap=3)
    with pytest.raises(ValueError):
        joint_space(model, "rewards")


def test_canonical_row_rules():
    # far off: rejected
    probs, problem = canonical_row([0.5, 0.4])
    assert probs is None and "mass" in problem
    # within 1e-9 but off by more than 1e-12: divided by the mass
    probs, problem = canonical_row([0.5, 0.5 + 5e-10])
    assert problem is None
    assert math.fsum(probs.tolist()) == pytest.approx(1.0, abs=1e-15)
    assert probs[1] != 0.5 + 5e-10
    # already exact: stored bit for bit
    probs, problem = canonical_row([0.25, 0.75])
    assert problem is None
    assert probs[0] == 0.25 and probs[1] == 0.75
    # negative entries are never probabilities
    probs, problem = canonical_row([1.1, -0.1])
    assert probs is None and "negative" in problem


def test_state_space_rejects_duplicates():
    with pytest.raises(ValueError):
        StateSpace(("a", "a"))
    with pytest.raises(ValueError):
        StateSpace(())
