import itertools

import pytest
from hypothesis import given, strategies as st

from dvfsmarl.actions import (HierAction, action_space_sizes, decode_action, decode_profiler,
                              decode_temperature, encode_action, encode_profiler, encode_temperature,
                              profiler_space_size, temperature_orders_distinct, temperature_space_size)
from dvfsmarl.errors import IndexOutOfRange


def test_sizes_at_six_by_twelve():
    s = action_space_sizes(6, 12)
    assert s.hierarchical == 54
    assert s.naive_bound == 6 ** 12 == 2_176_782_336
    assert s.naive_exact == 13 ** 6 - 1 == 4_826_808
    assert s.naive_exact <= s.naive_bound
    assert s.bound_holds


def test_sizes_smallest_case():
    s = action_space_sizes(1, 1)
    assert s.naive_exact == 1
    assert s.hierarchical == 3


@pytest.mark.parametrize("m,n", [(2, 3), (3, 3), (4, 5), (6, 12), (8, 4)])
def test_exact_count_matches_enumeration(m, n):
    # each nonempty core subset picks one of n frequencies per core
    count = sum(n ** len(sub) for r in range(1, m + 1) for sub in itertools.combinations(range(m), r))
    s = action_space_sizes(m, n)
    assert s.naive_exact == count
    assert s.naive_exact >= 2 ** m - 1 == s.frequency_free
    if m >= 3 and n >= 3:
        assert s.hierarchical < s.naive_exact


def test_large_sizes_do_not_overflow():
    s = action_space_sizes(64, 64)
    assert s.naive_exact == 65 ** 64 - 1


def test_invalid_sizes():
    with pytest.raises(ValueError):
        action_space_sizes(0, 3)


def test_profiler_space_enumeration():
    m, n = 3, 2
    cells = {decode_profiler(i, m, n) for i in range(profiler_space_size(m, n))}
    assert cells == {(c, f) for c in range(1, m + 1) for f in range(n)}


@pytest.mark.parametrize("m", [1, 4, 5, 6])
def test_temperature_orders_distinct_when_possible(m):
    assert temperature_orders_distinct(m)
    orders = {decode_temperature(t, m) for t in range(temperature_space_size(m))}
    assert len(orders) == m * m


@pytest.mark.parametrize("m", [2, 3])
def test_small_m_orders_collapse(m):
    assert not temperature_orders_distinct(m)


def test_index_zero_is_base_order():
    assert decode_temperature(0, 5, base_order=(3, 1, 4, 0, 2)) == (3, 1, 4, 0, 2)


@pytest.mark.parametrize("m,n", [(m, n) for m in range(1, 5) for n in range(1, 5)])
def test_codec_round_trip_exhaustive(m, n):
    base = tuple(reversed(range(m)))
    for p in range(m * n):
        for t in range(m * m):
            a = decode_action(p, t, m, n, base)
            a.validate(m, n)
            p2, t2 = encode_action(a, m, n, base)
            assert p2 == p
            # duplicate orderings (m in {2, 3}) encode to their smallest index
            assert decode_action(p2, t2, m, n, base) == a
            if temperature_orders_distinct(m):
                assert t2 == t


def test_codec_m3_n2_round_trip_on_actions():
    m, n = 3, 2
    actions = {decode_action(p, t, m, n) for p in range(m * n) for t in range(m * m)}
    for a in actions:
        assert decode_action(*encode_action(a, m, n), m, n) == a


def test_out_of_range_indices():
    with pytest.raises(IndexOutOfRange):
        decode_profiler(72, 6, 12)
    with pytest.raises(IndexOutOfRange):
        decode_temperature(36, 6)
    with pytest.raises(IndexOutOfRange):
        encode_profiler(0, 0, 6, 12)
    with pytest.raises(IndexOutOfRange):
        encode_temperature((0, 1, 2, 3, 5, 4), 6)  # not one of the m*m orderings


def test_action_dict_round_trip():
    a = HierAction(2, 3, (1, 0, 2))
    assert HierAction.from_dict(a.to_dict()) == a
    assert a.active_cores == (1, 0)


@given(st.integers(1, 8), st.integers(1, 16), st.data())
def test_profiler_codec_property(m, n, data):
    i = data.draw(st.integers(0, m * n - 1))
    assert encode_profiler(*decode_profiler(i, m, n), m, n) == i
