"""Counting module checks against brute-force tuple enumeration.

The oracle never goes through the histogram code: joint tuples are
enumerated with itertools.product and grouped by hand, and the grouped
counts are what the module must reproduce.
"""

import itertools
import math

import pytest

from declift.counting import (
    CountingVariable,
    Histogram,
    HistogramTuple,
    enumerate_histograms,
    histogram_count,
    histogram_multiplicity,
    is_peak_shaped,
    parse_histogram_key,
    parse_histogram_tuple_key,
    tuple_to_histogram,
)
from declift.errors import CapacityExceeded, RangeMismatch, SchemaError


def brute_force_histograms(n, r):
    """Group all r**n value tuples by their count vector."""
    groups = {}
    for combo in itertools.product(range(r), repeat=n):
        counts = tuple(combo.count(v) for v in range(r))
        groups[counts] = groups.get(counts, 0) + 1
    return groups


@pytest.mark.parametrize("n,r", [(1, 1), (2, 2), (3, 2), (2, 3), (4, 3), (6, 2), (5, 4)])
def test_enumeration_matches_brute_force(n, r):
    crv = CountingVariable("p", tuple(f"v{i}" for i in range(r)), n)
    groups = brute_force_histograms(n, r)
    enumerated = list(enumerate_histograms(crv))
    assert len(enumerated) == len(groups)
    assert {h.counts for h in enumerated} == set(groups)
    for h in enumerated:
        assert histogram_multiplicity(h) == groups[h.counts]


def test_enumeration_order_reverse_lexicographic():
    crv = CountingVariable("p", ("a", "b"), 2)
    assert [h.counts for h in enumerate_histograms(crv)] == [(2, 0), (1, 1), (0, 2)]
    crv3 = CountingVariable("p", ("a", "b", "c"), 2)
    counts = [h.counts for h in enumerate_histograms(crv3)]
    assert counts == sorted(counts, reverse=True)
    assert counts[0] == (2, 0, 0)


@pytest.mark.parametrize("n", range(0, 11))
@pytest.mark.parametrize("r", range(1, 5))
def test_histogram_count_closed_form(n, r):
    # oracle: stars-and-bars is re-derived via brute force for small sizes,
    # and via the direct comb identity otherwise
    if r ** n <= 4096:
        assert histogram_count(n, r) == len(brute_force_histograms(n, r))
    assert histogram_count(n, r) == math.comb(n + r - 1, r - 1)


@pytest.mark.parametrize("n", range(2, 11))
@pytest.mark.parametrize("r", range(1, 5))
def test_histogram_count_power_bound(n, r):
    assert histogram_count(n, r) <= n ** r


@pytest.mark.parametrize("n,r", [(2, 2), (3, 3), (10, 4), (7, 3)])
def test_multiplicities_sum_to_power(n, r):
    crv = CountingVariable("p", tuple(map(str, range(r))), n)
    total = sum(histogram_multiplicity(h) for h in enumerate_histograms(crv))
    assert total == r ** n


def test_large_group_exact_integers():
    # the scale the histogram view exists for: no float could hold these
    assert histogram_count(64000, 2) == 64001
    h = Histogram((32000, 32000))
    assert histogram_multiplicity(h) == math.comb(64000, 32000)


def test_tuple_to_histogram_with_member_selection():
    crv = CountingVariable("p", ("x", "y"), 2)
    h = tuple_to_histogram(("x", "q", "x"), crv, member_indices=(0, 2))
    assert h.counts == (2, 0)
    h = tuple_to_histogram(("x", "y", "x"), CountingVariable("p", ("x", "y"), 3))
    assert h.counts == (2, 1)


def test_tuple_to_histogram_range_mismatch():
    crv = CountingVariable("p", ("x", "y"), 2)
    with pytest.raises(RangeMismatch):
        tuple_to_histogram(("x", "z"), crv)
    with pytest.raises(RangeMismatch):
        tuple_to_histogram(("x",), crv)


def test_peak_shape():
    assert is_peak_shaped(Histogram((3, 0, 0)))
    assert is_peak_shaped(Histogram((0, 5)))
    assert not is_peak_shaped(Histogram((2, 1)))
    assert not is_peak_shaped(Histogram((0, 0)))


def test_peak_shaped_count_equals_range_size():
    crv = CountingVariable("p", ("a", "b", "c"), 4)
    peaks = [h for h in enumerate_histograms(crv) if is_peak_shaped(h)]
    assert len(peaks) == 3


def test_key_round_trip():
    h = Histogram((2, 0))
    assert h.key() == "[2,0]"
    assert parse_histogram_key("[2,0]") == h
    ht = HistogramTuple([Histogram((2, 0)), Histogram((1, 1))])
    assert ht.key() == "[2,0]|[1,1]"
    assert parse_histogram_tuple_key("[2,0]|[1,1]") == ht


@pytest.mark.parametrize("bad", ["[2,0", "2,0", "[2, 0]", "[]", "[-1,3]", "[01,2]", ""])
def test_malformed_keys_rejected(bad):
    with pytest.raises(SchemaError):
        parse_histogram_key(bad)


def test_enumeration_cap():
    crv = CountingVariable("p", tuple(map(str, range(4))), 1000)
    with pytest.raises(CapacityExceeded) as err:
        enumerate_histograms(crv, cap=10_000)
    assert err.value.measured == histogram_count(1000, 4)
    assert err.value.cap == 10_000


def test_histogram_rejects_negative_and_empty():
    with pytest.raises(ValueError):
        Histogram((-1, 2))
    with pytest.raises(ValueError):
        Histogram(())
