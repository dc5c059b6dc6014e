"""Temperature and profiler rewards."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyTemps, NonPositiveTarget

C_TH = 0.3
C_ST = 0.5
TEMP_THRESHOLD_C = 50.0


@dataclass(frozen=True)
class TargetsBaseline:
    energy_powersave_j: float
    makespan_performance_s: float

    def __post_init__(self):
        object.__setattr__(self, "energy_powersave_j", float(self.energy_powersave_j))
        object.__setattr__(self, "makespan_performance_s", float(self.makespan_performance_s))
        if not (self.energy_powersave_j > 0 and self.makespan_performance_s > 0):
            raise NonPositiveTarget(f"targets must be positive, got {self}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RewardBundle:
    r_temp: float
    r_energy: float
    r_makespan: float
    r_profiler: float

    def to_dict(self) -> dict:
        return asdict(self)


def temp_reward(temps: Sequence[float], threshold: float = TEMP_THRESHOLD_C) -> float:
    """Mean over cores of ``-1`` when a core is over ``threshold``, else its headroom."""
    t = np.asarray(temps, dtype=float)
    if t.size == 0:
        raise EmptyTemps("no core temperatures")
    return float(np.mean(np.where(t > threshold, -1.0, threshold - t)))


def shaped(delta: float, c_th: float = C_TH, c_st: float = C_ST) -> float:
    """Exponential reward for a normalized overshoot ``delta`` against a target.

    Undershoot counts as meeting the target, so the result stays in [-1, 1].
    """
    delta = max(float(delta), 0.0)
    if delta > c_th:
        return -1.0
    return 2.0 * math.exp(-c_st * delta / c_th) - 1.0


def profiler_reward(energy_j: float, makespan_s: float, targets: TargetsBaseline,
                    c_th: float = C_TH, c_st: float = C_ST,
                    temps: Sequence[float] | None = None,
                    temp_threshold: float = TEMP_THRESHOLD_C) -> RewardBundle:
    if not (c_th > 0 and c_st > 0):
        raise ValueError("c_th and c_st must be positive")
    e_delta = (energy_j - targets.energy_powersave_j) / targets.energy_powersave_j
    t_delta = (makespan_s - targets.makespan_performance_s) / targets.makespan_performance_s
    r_e = shaped(e_delta, c_th, c_st)
    r_m = shaped(t_delta, c_th, c_st)
    r_t = temp_reward(temps, temp_threshold) if temps is not None else 0.0
    return RewardBundle(r_t, r_e, r_m, 0.5 * (r_e + r_m))
