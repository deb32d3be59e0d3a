"""
Single-agent solvers: value iteration and conditional plans
===========================================================

A two-room world: staying in the good room pays 1 per step, and a noisy
sensor only hints at which room we are in.  Fully observable, the MDP
solver finds the obvious policy.  Partially observable, the planner
keeps one value vector per undominated conditional plan.
"""

import numpy as np

from declift import (
    Belief,
    DiscreteDistribution,
    Mdp,
    Pomdp,
    StateSpace,
    belief_update,
    mdp_value_iteration,
    pomdp_plan_iteration,
)

states = StateSpace(("cold", "warm"))
actions = {s: ("stay", "move") for s in states}
transition = {
    ("cold", "stay"): DiscreteDistribution([1.0, 0.0]),
    ("cold", "move"): DiscreteDistribution([0.1, 0.9]),
    ("warm", "stay"): DiscreteDistribution([0.0, 1.0]),
    ("warm", "move"): DiscreteDistribution([0.9, 0.1]),
}
reward = {"cold": 0.0, "warm": 1.0}

# ---- fully observable -------------------------------------------------
mdp = Mdp(states, actions, transition, reward, 0.9)
table, policy = mdp_value_iteration(mdp, epsilon=1e-8)
print(f"value iteration converged after {table.iterations} sweeps")
for s in states:
    print(f"  {s}: utility {table.values[s]:.6f}, best action {policy[s]}")
print()

# ---- partially observable ---------------------------------------------
# the sensor reads the right room 80% of the time
observations = ("feels-cold", "feels-warm")
sensor = {
    "cold": DiscreteDistribution([0.8, 0.2]),
    "warm": DiscreteDistribution([0.2, 0.8]),
}
pomdp = Pomdp(states, actions, transition, reward, 0.9, observations, sensor)

stats = []
vectors = pomdp_plan_iteration(pomdp, horizon=3, stats=stats)
for depth, (generated, surviving) in enumerate(stats, start=1):
    print(f"depth {depth}: {generated:3d} candidate plans, {surviving} survive pruning")
print()

# the undominated plans carve the belief simplex into decision regions
print("surviving root actions and their values at a few beliefs:")
for p_warm in (0.0, 0.25, 0.5, 0.75, 1.0):
    b = np.array([1.0 - p_warm, p_warm])
    best = max(vectors, key=lambda v: float(b @ v.alpha))
    print(
        f"  P(warm)={p_warm:.2f}: value {float(b @ best.alpha):7.4f}, "
        f"root action {best.plan.action}"
    )
print()

# ---- belief updates ---------------------------------------------------
b = Belief(states, [0.5, 0.5])
print("belief after staying and feeling warm, three times over:")
for step in range(3):
    b = belief_update(pomdp, b, "stay", "feels-warm")
    print(f"  step {step + 1}: P(warm) = {b.probs[1]:.4f}")
