"""Extraction cost and latency against exhaustive profiling."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence


@dataclass(frozen=True)
class CostReport:
    n_benchmarks: int
    cost_per_benchmark_usd: float
    total_cost_usd: float
    latency_per_benchmark_s: float
    total_latency_s: float
    profiling_hours_per_benchmark: float
    profiling_cost_usd: float
    savings_factor: float | None
    speedup_vs_profiling: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def extraction_cost(n_benchmarks: int, cost_per_benchmark_usd: float,
                    latencies_s: Sequence[float] = (), profiling_hours: float = 8.0,
                    labor_rate_usd_per_h: float = 50.0) -> CostReport:
    """``latencies_s`` are measured per-benchmark extraction times; their mean stands for every benchmark."""
    if n_benchmarks < 0 or cost_per_benchmark_usd < 0:
        raise ValueError("counts and prices must be nonnegative")
    lat = sum(latencies_s) / len(latencies_s) if latencies_s else 0.0
    total = n_benchmarks * cost_per_benchmark_usd
    prof_cost = n_benchmarks * profiling_hours * labor_rate_usd_per_h
    return CostReport(
        n_benchmarks=n_benchmarks,
        cost_per_benchmark_usd=cost_per_benchmark_usd,
        total_cost_usd=total,
        latency_per_benchmark_s=lat,
        total_latency_s=lat * n_benchmarks,
        profiling_hours_per_benchmark=profiling_hours,
        profiling_cost_usd=prof_cost,
        savings_factor=prof_cost / total if total > 0 else None,
        speedup_vs_profiling=profiling_hours * 3600.0 / lat if lat > 0 else None,
    )
