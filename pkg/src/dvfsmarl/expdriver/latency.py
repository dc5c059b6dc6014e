"""Decision-latency accounting against building an exhaustive table."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

from ..governors import table_build_cost

# headline speedups quoted alongside the exact ones; both come from rounder latency totals
REPORTED_FIRST_SPEEDUP = 8300.0
REPORTED_SUBSEQUENT_SPEEDUP = 80000.0
ROUNDING_CAVEAT = (
    "the quoted ~8,300x corresponds to a first-decision latency near 3.25 s "
    "(27,000 / 3.25 = 8,308); the component sum used here is 3.478 s, and "
    "the quoted ~80,000x subsequent speedup rounds 27,000 / 0.358 = 75,419 upward"
)


@dataclass
class LatencyLedger:
    t_llm_s: float
    t_static_s: float
    t_rl_s: float
    samples: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        if min(self.t_llm_s, self.t_static_s, self.t_rl_s) < 0:
            raise ValueError("latencies must be nonnegative")

    @property
    def t_total_s(self) -> float:
        return self.t_llm_s + self.t_static_s + self.t_rl_s

    @classmethod
    def from_samples(cls, samples: dict[str, list[float]]) -> "LatencyLedger":
        def mean(k):
            v = samples.get(k, [])
            return sum(v) / len(v) if v else 0.0
        return cls(mean("llm"), mean("static"), mean("rl"), {k: list(v) for k, v in samples.items()})


@dataclass(frozen=True)
class ProfileParams:
    m: int = 6
    k: int = 12
    n_workloads: int = 15
    rho: int = 5
    t_bar_s: float = 5.0


@dataclass
class LatencyComparison:
    t_llm_s: float
    t_static_s: float
    t_rl_s: float
    t_total_s: float
    t_table_s: float
    first_decision_speedup: float | None
    subsequent_speedup: float | None
    reported_first_speedup: float = REPORTED_FIRST_SPEEDUP
    reported_subsequent_speedup: float = REPORTED_SUBSEQUENT_SPEEDUP
    caveat: str = ROUNDING_CAVEAT

    def to_dict(self) -> dict:
        return asdict(self)

    def lines(self) -> list[str]:
        def fmt(x):
            return "undefined" if x is None else f"{x:,.0f}x"
        return [
            f"T_total = {self.t_llm_s} + {self.t_static_s} + {self.t_rl_s} = {self.t_total_s:.3f} s",
            f"T_table = {self.t_table_s:,.0f} s",
            f"first-decision speedup  = {fmt(self.first_decision_speedup)} (quoted ~{self.reported_first_speedup:,.0f}x)",
            f"subsequent speedup      = {fmt(self.subsequent_speedup)} (quoted ~{self.reported_subsequent_speedup:,.0f}x)",
            f"note: {self.caveat}",
        ]


def latency_report(ledger: LatencyLedger, params: ProfileParams = ProfileParams()) -> LatencyComparison:
    t_table = table_build_cost(params.m, params.k, params.n_workloads, params.rho, params.t_bar_s)
    total = ledger.t_total_s
    return LatencyComparison(
        ledger.t_llm_s, ledger.t_static_s, ledger.t_rl_s, total, t_table,
        t_table / total if total > 0 else None,
        t_table / ledger.t_rl_s if ledger.t_rl_s > 0 else None,
    )


def time_calls(fn: Callable[[], object], n: int = 100, clock: Callable[[], float] = time.perf_counter) -> list[float]:
    """Wall-clock seconds of ``n`` calls to ``fn``."""
    out = []
    for _ in range(n):
        t0 = clock()
        fn()
        out.append(clock() - t0)
    return out
