"""Deployment-time guard rails around the learned policy.

Three layers, applied in order of severity:

1. a thermal watchdog that forces the minimum frequency at ``watchdog_warn_c``
   and locks to powersave at ``watchdog_critical_c`` until every core cools
   below ``reenable_below_c``;
2. an uncertainty veto that replaces the action with ondemand's choice when
   the dropout spread of the performance model exceeds ``uncertainty_tau``;
3. conservative caps on frequency and core count that relax with the number
   of fine-tuning samples seen on the target platform.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..actions import HierAction, identity_action
from ..governors import govern
from ..platform_sim import PlatformSpec, SimState

PREDICTION_VETOED = "PredictionVetoed"
CRITICAL_THERMAL = "CriticalThermal"
THERMAL_WARNING = "ThermalWarning"
LOCK_RELEASED = "LockReleased"
CAP_APPLIED = "CapApplied"


@dataclass(frozen=True)
class SafetyConfig:
    conservative_freq_cap: float = 0.5
    conservative_core_cap: float = 0.5
    conservative_temp_threshold: float = 40.0
    uncertainty_tau: float = 0.15
    uncertainty_passes: int = 10
    watchdog_warn_c: float = 60.0
    watchdog_critical_c: float = 65.0
    reenable_below_c: float = 50.0
    watchdog_period_s: float = 0.1
    relaxation_schedule: tuple[tuple[int, float], ...] = ((5, 0.65), (10, 0.80), (20, 1.0))
    # relaxation only advances while validation MAPE stays under this (None disables the gate)
    validation_mape_gate: float | None = 50.0

    def __post_init__(self):
        object.__setattr__(self, "relaxation_schedule",
                           tuple(sorted((int(k), float(v)) for k, v in self.relaxation_schedule)))
        if not self.watchdog_warn_c < self.watchdog_critical_c:
            raise ValueError("watchdog_warn_c must be below watchdog_critical_c")
        if not self.reenable_below_c <= self.watchdog_warn_c:
            raise ValueError("reenable_below_c must not exceed watchdog_warn_c")
        caps = [self.conservative_freq_cap, self.conservative_core_cap] + [v for _, v in self.relaxation_schedule]
        if any(not 0 < c <= 1 for c in caps):
            raise ValueError("caps must lie in (0, 1]")
        if self.uncertainty_passes < 1 or self.watchdog_period_s <= 0:
            raise ValueError("uncertainty_passes and watchdog_period_s must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["relaxation_schedule"] = [list(p) for p in self.relaxation_schedule]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SafetyConfig":
        d = dict(d)
        if "relaxation_schedule" in d:
            d["relaxation_schedule"] = tuple(tuple(p) for p in d["relaxation_schedule"])
        return cls(**d)


@dataclass(frozen=True)
class SafetyEvent:
    kind: str
    time_s: float
    cause: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def freq_cap_index(cap: float, n: int) -> int:
    return int(np.floor(cap * (n - 1) + 1e-9))


def core_cap_count(cap: float, m: int) -> int:
    return max(1, int(np.ceil(cap * m - 1e-9)))


class SafetyLayer:
    """Stateful filter; one instance per deployment run."""

    def __init__(self, config: SafetyConfig, spec: PlatformSpec, conservative: bool = True):
        self.config = config
        self.spec = spec
        self.conservative = conservative
        self.samples = 0
        self.locked = False
        self.events: list[SafetyEvent] = []

    # relaxation ----------------------------------------------------------
    @property
    def cap(self) -> float:
        if not self.conservative:
            return 1.0
        cap = self.config.conservative_freq_cap
        for need, value in self.config.relaxation_schedule:
            if self.samples >= need:
                cap = value
        return cap

    @property
    def core_cap(self) -> float:
        if not self.conservative:
            return 1.0
        if self.samples < self.config.relaxation_schedule[0][0]:
            return self.config.conservative_core_cap
        return max(self.cap, self.config.conservative_core_cap)

    @property
    def temp_threshold(self) -> float:
        """Reward threshold in force; tighter while conservative."""
        if self.conservative and self.cap < 1.0:
            return self.config.conservative_temp_threshold
        return 50.0

    @property
    def exploration_enabled(self) -> bool:
        return not (self.conservative and self.cap < 1.0)

    def record_finetune(self, n_samples: int, validation_mape: float | None = None) -> float:
        """Count fine-tuning samples; returns the cap now in force."""
        gate = self.config.validation_mape_gate
        if gate is not None and validation_mape is not None and validation_mape >= gate:
            return self.cap
        self.samples += int(n_samples)
        return self.cap

    # watchdog --------------------------------------------------------------
    def _emit(self, kind, time_s, cause, **detail) -> SafetyEvent:
        ev = SafetyEvent(kind, float(time_s), cause, detail)
        self.events.append(ev)
        return ev

    def thermal_check(self, temps: Sequence[float], time_s: float = 0.0) -> int | None:
        """Watchdog decision for the current temperatures: a forced frequency index or None."""
        t = np.asarray(temps, dtype=float)
        hot = float(t.max())
        if self.locked:
            if hot < self.config.reenable_below_c:
                self.locked = False
                self._emit(LOCK_RELEASED, time_s, f"all cores below {self.config.reenable_below_c}", max_temp=hot)
            else:
                return 0
        if hot >= self.config.watchdog_critical_c:
            self.locked = True
            self._emit(CRITICAL_THERMAL, time_s, f"core at {hot:.2f} C", core=int(t.argmax()), max_temp=hot)
            return 0
        if hot >= self.config.watchdog_warn_c:
            self._emit(THERMAL_WARNING, time_s, f"core at {hot:.2f} C", core=int(t.argmax()), max_temp=hot)
            return 0
        return None

    def watchdog(self) -> "SafetyWatchdog":
        return SafetyWatchdog(self)

    # filter ----------------------------------------------------------------
    def filter(self, raw: HierAction, state: SimState,
               model_uncertainty: float | None = None) -> tuple[HierAction, list[SafetyEvent]]:
        m, n = self.spec.m, self.spec.n
        raw.validate(m, n)
        start = len(self.events)
        now = state.time_s
        forced = self.thermal_check(state.temps_c, now)
        if self.locked:
            return identity_action(m, m, 0), self.events[start:]
        action = raw
        if model_uncertainty is not None and model_uncertainty > self.config.uncertainty_tau:
            action = govern("ondemand", state, self.spec)
            self._emit(PREDICTION_VETOED, now, f"uncertainty {model_uncertainty:.3f} > tau",
                       uncertainty=float(model_uncertainty), raw=raw.to_dict())
        f_cap = freq_cap_index(self.cap, n)
        c_cap = core_cap_count(self.core_cap, m)
        if action.freq_index > f_cap or action.core_count > c_cap:
            clamped = HierAction(min(action.core_count, c_cap), min(action.freq_index, f_cap), action.priority)
            self._emit(CAP_APPLIED, now, f"cap {self.cap:.2f}", raw=action.to_dict(), clamped=clamped.to_dict())
            action = clamped
        if forced is not None:
            action = HierAction(action.core_count, forced, action.priority)
        return action, self.events[start:]


def safety_filter(layer: SafetyLayer, raw_action: HierAction, state: SimState,
                  model_uncertainty: float | None = None) -> tuple[HierAction, list[SafetyEvent]]:
    return layer.filter(raw_action, state, model_uncertainty)


class SafetyWatchdog:
    """Adapter that lets the simulator poll the layer every ``watchdog_period_s``."""

    def __init__(self, layer: SafetyLayer):
        self.layer = layer
        self.period_s = layer.config.watchdog_period_s

    def check(self, temps, time_s):
        return self.layer.thermal_check(temps, time_s)


def model_uncertainty(model, x, passes: int = 10, rate: float = 0.1, seed: int = 0,
                      channel: int | None = None) -> float:
    """Mean dropout-ensemble standard deviation of a model's prediction."""
    _, std = model.predict_with_dropout(x, passes=passes, rate=rate, seed=seed)
    if channel is not None:
        std = std[..., channel]
    return float(np.mean(std))
