"""Joint scheduling action, the two-agent action codec and action-space arithmetic.

The profiler agent picks a (core count, frequency index) pair from a flat
index over ``m * n`` cells.  The temperature agent picks one of ``m * m``
priority orderings.  Temperature index ``t = lead * m + second`` addresses
positions in a *base ordering* (at runtime the coolest-first ordering):

* ``lead == second``: ``[lead]`` followed by the remaining positions ascending
* ``lead != second``: ``[lead, second]`` followed by the rest descending

Index 0 is therefore the base ordering itself.  The ``m * m`` orderings are
pairwise distinct for ``m == 1`` and ``m >= 4``.  For ``m in {2, 3}`` there are
fewer permutations than indices (``m! < m*m``), so several indices decode to
the same ordering and :func:`encode_action` returns the smallest one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .errors import IndexOutOfRange, InvalidAction


@dataclass(frozen=True)
class HierAction:
    core_count: int
    freq_index: int
    priority: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "priority", tuple(int(p) for p in self.priority))

    def validate(self, m: int, n: int) -> "HierAction":
        if not 1 <= self.core_count <= m:
            raise InvalidAction(f"core_count {self.core_count} outside [1, {m}]")
        if not 0 <= self.freq_index < n:
            raise InvalidAction(f"freq_index {self.freq_index} outside [0, {n - 1}]")
        if sorted(self.priority) != list(range(m)):
            raise InvalidAction(f"priority {self.priority} is not a permutation of 0..{m - 1}")
        return self

    @property
    def active_cores(self) -> tuple[int, ...]:
        return self.priority[: self.core_count]

    def to_dict(self) -> dict:
        return {"core_count": self.core_count, "freq_index": self.freq_index,
                "priority": list(self.priority)}

    @classmethod
    def from_dict(cls, d: dict) -> "HierAction":
        return cls(int(d["core_count"]), int(d["freq_index"]), tuple(d["priority"]))


def identity_action(m: int, core_count: int, freq_index: int) -> HierAction:
    return HierAction(core_count, freq_index, tuple(range(m)))


def profiler_space_size(m: int, n: int) -> int:
    return m * n


def temperature_space_size(m: int) -> int:
    return m * m


@lru_cache(maxsize=64)
def _position_orders(m: int) -> tuple[tuple[int, ...], ...]:
    orders = []
    for t in range(m * m):
        lead, second = divmod(t, m)
        rest = [p for p in range(m) if p != lead]
        if lead == second:
            orders.append((lead, *rest))
        else:
            rest.remove(second)
            orders.append((lead, second, *sorted(rest, reverse=True)))
    return tuple(orders)


@lru_cache(maxsize=64)
def _position_index(m: int) -> dict[tuple[int, ...], int]:
    index: dict[tuple[int, ...], int] = {}
    for t, order in enumerate(_position_orders(m)):
        index.setdefault(order, t)
    return index


def temperature_orders_distinct(m: int) -> bool:
    return len(_position_index(m)) == m * m


def decode_profiler(index: int, m: int, n: int) -> tuple[int, int]:
    """Flat profiler index -> (core_count, freq_index)."""
    if not 0 <= index < m * n:
        raise IndexOutOfRange(f"profiler index {index} outside [0, {m * n})")
    cores_minus_one, freq = divmod(int(index), n)
    return cores_minus_one + 1, freq


def encode_profiler(core_count: int, freq_index: int, m: int, n: int) -> int:
    if not (1 <= core_count <= m and 0 <= freq_index < n):
        raise IndexOutOfRange(f"({core_count}, {freq_index}) outside the {m}x{n} grid")
    return (core_count - 1) * n + freq_index


def decode_temperature(index: int, m: int, base_order: Sequence[int] | None = None) -> tuple[int, ...]:
    if not 0 <= index < m * m:
        raise IndexOutOfRange(f"temperature index {index} outside [0, {m * m})")
    base = tuple(range(m)) if base_order is None else tuple(base_order)
    return tuple(base[p] for p in _position_orders(m)[int(index)])


def encode_temperature(priority: Sequence[int], m: int, base_order: Sequence[int] | None = None) -> int:
    base = tuple(range(m)) if base_order is None else tuple(base_order)
    where = {core: pos for pos, core in enumerate(base)}
    try:
        positions = tuple(where[c] for c in priority)
    except KeyError as exc:
        raise IndexOutOfRange(f"core {exc} not in base ordering") from None
    try:
        return _position_index(m)[positions]
    except KeyError:
        raise IndexOutOfRange(f"priority {tuple(priority)} is not a temperature-agent ordering") from None


def decode_action(profiler_index: int, temperature_index: int, m: int, n: int,
                  base_order: Sequence[int] | None = None) -> HierAction:
    cores, freq = decode_profiler(profiler_index, m, n)
    return HierAction(cores, freq, decode_temperature(temperature_index, m, base_order))


def encode_action(action: HierAction, m: int, n: int,
                  base_order: Sequence[int] | None = None) -> tuple[int, int]:
    return (encode_profiler(action.core_count, action.freq_index, m, n),
            encode_temperature(action.priority, m, base_order))


@dataclass(frozen=True)
class ActionSpaceSizes:
    naive_exact: int
    naive_bound: int
    hierarchical: int
    frequency_free: int

    @property
    def bound_holds(self) -> bool:
        """Whether ``m**n`` actually dominates the exact count (it does not for every m, n)."""
        return self.naive_exact <= self.naive_bound


def action_space_sizes(m: int, n: int) -> ActionSpaceSizes:
    """Exact and bounded action counts for a naive single agent vs the two-agent split.

    Python integers are unbounded, so large ``m``/``n`` never overflow.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    exact = (1 + n) ** m - 1  # sum_i C(m,i) n^i
    sizes = ActionSpaceSizes(
        naive_exact=exact,
        naive_bound=m ** n,
        hierarchical=m * m + m + n,
        frequency_free=2 ** m - 1,
    )
    assert sizes.naive_exact >= sizes.frequency_free
    return sizes
