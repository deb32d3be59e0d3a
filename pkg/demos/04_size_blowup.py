"""
How fast the tables blow up, and how much lifting saves
=======================================================

Table sizes in bits (log2 of the key-space cardinality times nothing
fancy): the ground joint-action space is exponential in the number of
agents, the lifted key space is only polynomial, and if every partition
acts in lockstep (peak-shaped histograms) the count collapses further.
"""

from declift import SizeParams, ground_sizes, lifted_sizes, peak_sizes, size_report

# a family of instances: 2 actions, 2 observations, 5 partitions, growing n
print(f"{'n per partition':>16} {'ground T':>12} {'lifted T':>12} {'peak T':>10}")
for n in (2, 8, 64, 1000, 64000):
    params = SizeParams(
        states=32,
        agents=5 * n,
        partitions=5,
        actions_per_agent=2,
        observations_per_agent=2,
        partition_size=n,
    )
    gt, _ = ground_sizes(params)
    lt, _, _ = lifted_sizes(params)
    pt, _ = peak_sizes(params)
    print(f"{n:>16} {gt:>12.1f} {lt:>12.1f} {pt:>10.1f}")
print()

# the full report for the largest instance above
params = SizeParams(32, 320000, 5, 2, 2, 64000)
report = size_report(params)
print("at n = 64000:")
print(f"  ground   log2(T) = {report.ground_transition}")
print(f"  ground   log2(S) = {report.ground_sensor}")
print(f"  lifted   log2(T) = {report.lifted_transition}")
print(f"  lifted   log2(S) = {report.lifted_sensor}")
print(f"  peak     log2(T) = {report.peak_transition}")
print(f"  peak     log2(S) = {report.peak_sensor}")
print(f"  exact histogram keys per partition: {report.exact_key_counts[0]}")
print()
print("a ground table with 2^320010 rows does not fit anywhere;")
print("the lifted one is around 2^170, still huge, and the peak-shaped")
print("restriction is 2^15: small enough to enumerate by hand.")
