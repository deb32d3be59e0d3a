"""
Lifting a symmetric team and getting it back
============================================

Three identical drones push a counter up or down; the dynamics only see
how many pushed up.  The lifting chain detects that symmetry, rewrites
the tables over count histograms, and the ground expansion reverses the
rewrite exactly.  Both forms solve to the same optimal team value.
"""

import itertools

from declift import (
    Belief,
    DiscreteDistribution,
    GroundDecPomdp,
    StateSpace,
    decpomdp_exhaustive,
    ground,
    lift,
    lifted_exhaustive,
    range_partition,
    symmetry_refine,
)

N = 3
agents = tuple(f"drone{i}" for i in range(N))
states = StateSpace(("low", "high"))
actions = {a: ("up", "down") for a in agents}
observations = {a: ("ping", "quiet") for a in agents}

# P(high') rises with the number of agents pushing up, identically for all
transition = {}
for s in states:
    for ja in itertools.product(("up", "down"), repeat=N):
        ups = ja.count("up")
        p_high = (0.2 if s == "low" else 0.5) + 0.15 * ups
        transition[(s, ja)] = DiscreteDistribution([1.0 - p_high, p_high])

# each agent pings independently, more often in the high state
sensor = {}
for s, q in (("low", 0.25), ("high", 0.75)):
    row = {}
    for jo in itertools.product(("ping", "quiet"), repeat=N):
        p = 1.0
        for o in jo:
            p *= q if o == "ping" else 1.0 - q
        row[jo] = p
    sensor[s] = row

team = GroundDecPomdp(
    agents,
    states,
    actions,
    observations,
    transition,
    sensor,
    {"low": 0.0, "high": 1.0},
    0.9,
    Belief(states, [0.7, 0.3]),
)

# ---- detect the symmetry and lift --------------------------------------
candidate = range_partition(team)
refined = symmetry_refine(team, candidate)
print("range partition blocks:  ", candidate.blocks)
print("after symmetry refinement:", refined.blocks)

lifted = lift(team, refined)
ground_rows = len(team.transition)
lifted_rows = len(lifted.transition)
print(f"transition rows: {ground_rows} ground -> {lifted_rows} lifted")
print("lifted action keys:", sorted(k for (_, k) in lifted.transition)[:4], "...")
print()

# ---- round trip ---------------------------------------------------------
back = ground(lifted)
drift = 0.0
for key, dist in team.transition.items():
    drift = max(drift, float(max(abs(back.transition[key].probs - dist.probs))))
for s in team.sensor:
    for jo, p in team.sensor[s].items():
        drift = max(drift, abs(back.sensor[s][jo] - p))
print(f"ground -> lift -> ground worst entry drift: {drift:.2e}")
print()

# ---- same optimum either way --------------------------------------------
h = 2
g = decpomdp_exhaustive(team, h)
l = lifted_exhaustive(lifted, h)
print(f"horizon-{h} optimal value, ground form: {g.value:.12f}")
print(f"horizon-{h} optimal value, lifted form: {l.value:.12f}")
print(f"difference: {abs(g.value - l.value):.2e}")

# the lifted policy assigns plans to counts of members, not to individuals
plans = l.policy.plans[0]
print("lifted policy for the drone partition:")
for plan, count in plans:
    print(f"  {count} member(s) follow: root action {plan.action!r}")
