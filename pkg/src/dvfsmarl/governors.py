"""Utilization-driven baseline governors and the exhaustive-sweep lookup table.

Every governor decides once per workload run from the utilization observed
on the previous run and always activates all cores in identity priority.
Utilization is ``busy / (busy + idle)`` where busy counts stall time too;
that is the blind spot the learned policy is meant to avoid.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .actions import HierAction, identity_action
from .errors import SweepAborted, UnknownWorkload
from .platform_sim import PlatformSpec, SimState, WorkloadSpec, execute, initial_state

GOVERNOR_KINDS = ("performance", "powersave", "ondemand", "conservative", "schedutil", "table_precise")


@dataclass(frozen=True)
class GovernorParams:
    up_threshold: float = 0.8
    down_threshold: float = 0.3
    step: int = 1
    window: int = 5

    def __post_init__(self):
        if not (0 < self.down_threshold <= 1 and 0 < self.up_threshold <= 1):
            raise ValueError("thresholds must lie in (0, 1]")
        if self.step < 1 or self.window < 1:
            raise ValueError("step and window must be >= 1")


def govern(kind: str, state: SimState, spec: PlatformSpec,
           params: GovernorParams | None = None, prev_freq: int | None = None,
           history: Sequence[float] = ()) -> HierAction:
    """Stateless decision rule.

    ``prev_freq`` feeds the conservative governor; ``history`` holds earlier
    utilization samples for schedutil (the current state is appended).
    """
    p = params or GovernorParams()
    m, n = spec.m, spec.n
    util = state.utilization
    if kind == "performance":
        f = n - 1
    elif kind == "powersave":
        f = 0
    elif kind == "ondemand":
        f = n - 1 if util >= p.up_threshold else 0
    elif kind == "conservative":
        f = 0 if prev_freq is None else prev_freq
        if util >= p.up_threshold:
            f += p.step
        elif util < p.down_threshold:
            f -= p.step
        f = int(np.clip(f, 0, n - 1))
    elif kind == "schedutil":
        window = list(history)[-(p.window - 1):] if p.window > 1 else []
        predicted = float(np.mean(window + [util]))
        f = int(round(predicted * (n - 1)))
    else:
        raise ValueError(f"unknown governor {kind!r}")
    return identity_action(m, m, f)


class Governor:
    """Stateful wrapper that keeps the conservative index and schedutil window."""

    def __init__(self, kind: str, params: GovernorParams | None = None):
        if kind not in GOVERNOR_KINDS or kind == "table_precise":
            raise ValueError(f"unknown governor {kind!r}")
        self.kind = kind
        self.params = params or GovernorParams()
        self.reset()

    def reset(self) -> None:
        self._freq: int | None = None
        self._history: deque[float] = deque(maxlen=self.params.window)

    def decide(self, state: SimState, spec: PlatformSpec) -> HierAction:
        a = govern(self.kind, state, spec, self.params, self._freq, tuple(self._history))
        self._history.append(state.utilization)
        self._freq = a.freq_index
        return a


# Precise table --------------------------------------------------------------

@dataclass(frozen=True)
class TableCell:
    makespan_s: float
    energy_j: float
    peak_temp_c: float


@dataclass(frozen=True)
class TableMeta:
    m: int
    k: int
    n_workloads: int
    rho: int
    mean_exec_s: float
    build_cost_s: float


def table_build_cost(m: int, k: int, n_workloads: int, rho: int, mean_exec_s: float) -> float:
    """Profiling wall time of an exhaustive sweep: ``m * k * |workloads| * rho * t_bar``."""
    if min(m, k, n_workloads, rho) < 1 or mean_exec_s < 0:
        raise ValueError("sweep dimensions must be >= 1 and mean_exec_s >= 0")
    return float(m * k * n_workloads * rho * mean_exec_s)


@dataclass
class PreciseTable:
    cells: dict[tuple[str, int, int], TableCell]
    meta: TableMeta
    raw: list[dict] = field(default_factory=list)

    def workloads(self) -> list[str]:
        return sorted({w for w, _, _ in self.cells})

    def lookup(self, workload_id: str, core_count: int, freq_index: int) -> TableCell:
        try:
            return self.cells[(workload_id, core_count, freq_index)]
        except KeyError:
            if workload_id not in self.workloads():
                raise UnknownWorkload(workload_id) from None
            raise

    def to_dict(self) -> dict:
        return {
            "meta": asdict(self.meta),
            "cells": [{"workload": w, "core_count": c, "freq_index": f, **asdict(v)}
                      for (w, c, f), v in sorted(self.cells.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreciseTable":
        cells = {(r["workload"], int(r["core_count"]), int(r["freq_index"])):
                 TableCell(r["makespan_s"], r["energy_j"], r["peak_temp_c"]) for r in d["cells"]}
        return cls(cells, TableMeta(**d["meta"]))

    def save(self, path, raw_log_path=None) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))
        if raw_log_path is not None:
            with open(raw_log_path, "w") as fh:
                for rec in self.raw:
                    fh.write(json.dumps(rec) + "\n")

    @classmethod
    def load(cls, path) -> "PreciseTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_table(spec: PlatformSpec, workloads: Mapping[str, WorkloadSpec], rho: int,
                seed: int = 0, state: SimState | None = None) -> PreciseTable:
    """Run every (workload, core count, frequency) cell ``rho`` times from the same start state."""
    if rho < 1:
        raise ValueError("rho must be >= 1")
    if not workloads:
        raise ValueError("need at least one workload")
    start = state or initial_state(spec)
    m, k = spec.m, spec.n
    cells: dict[tuple[str, int, int], TableCell] = {}
    raw: list[dict] = []
    for wi, wid in enumerate(sorted(workloads)):
        wl = workloads[wid]
        for c in range(1, m + 1):
            for f in range(k):
                outs = []
                for r in range(rho):
                    run_seed = int(np.random.SeedSequence([seed, wi, c, f, r]).generate_state(1)[0])
                    try:
                        out = execute(spec, wl, identity_action(m, c, f), start, run_seed)
                    except Exception as exc:
                        raise SweepAborted(f"cell ({wid}, {c}, {f}) rep {r}: {exc}") from exc
                    outs.append(out)
                    raw.append({"workload": wid, "core_count": c, "freq_index": f, "rep": r,
                                "makespan_s": out.makespan_s, "energy_j": out.energy_j,
                                "peak_temp_c": out.peak_temp_c})
                cells[(wid, c, f)] = TableCell(
                    float(np.mean([o.makespan_s for o in outs])),
                    float(np.mean([o.energy_j for o in outs])),
                    float(np.mean([o.peak_temp_c for o in outs])),
                )
    t_bar = float(np.mean([r["makespan_s"] for r in raw]))
    meta = TableMeta(m, k, len(workloads), rho, t_bar, table_build_cost(m, k, len(workloads), rho, t_bar))
    return PreciseTable(cells, meta, raw)


def table_schedule(table: PreciseTable, workload_id: str, makespan_slack: float = 1.2,
                   m: int | None = None) -> HierAction:
    """Lowest-energy cell whose makespan is within ``makespan_slack`` of the table's best."""
    rows = [(key, cell) for key, cell in table.cells.items() if key[0] == workload_id]
    if not rows:
        raise UnknownWorkload(workload_id)
    cap = makespan_slack * min(cell.makespan_s for _, cell in rows)
    feasible = [(cell.energy_j, key[1], key[2]) for key, cell in rows if cell.makespan_s <= cap + 1e-12]
    _, cores, freq = min(feasible)
    return identity_action(m or table.meta.m, cores, freq)
