"""Seedable synthetic multi-core platform.

A workload runs in three phases on the cores chosen by a :class:`HierAction`:
a serial phase on the lead core, an Amdahl parallel phase shared by all
active cores and a synchronisation phase (frequency-insensitive busy wait on
every active core).  Time per work unit on core ``i`` at normalised frequency
``fn`` is ``((1 - mb) / fn + mb) / eff_i``: the ``mb`` share is stall time that
frequency cannot shorten.  One work unit takes one second on an efficiency-1.0
core at maximum frequency when ``mb == 0``.

Power per core is ``power_static_w / m`` plus ``power_dyn_coeff * fn**3``
scaled by the core's busy fraction of the tick.  Temperatures follow a
first-order RC model advanced every tick.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Protocol, Sequence

import numpy as np

from .actions import HierAction
from .errors import InvalidAction, NonFiniteState, NonFiniteTemperature

TX2_FREQS_HZ = tuple(f * 1e3 for f in (
    345600, 499200, 652800, 806400, 960000, 1113600,
    1267200, 1420800, 1574400, 1728000, 1881600, 2035200,
))


@dataclass(frozen=True)
class PlatformSpec:
    core_count: int = 6
    freq_table: tuple[float, ...] = TX2_FREQS_HZ
    core_efficiency: tuple[float, ...] = (1.0, 1.0, 0.8, 0.8, 0.8, 0.8)
    thermal_ambient: float = 25.0
    thermal_resistance: float = 25.0
    thermal_time_constant: float = 4.0
    power_static_w: float = 0.3
    power_dyn_coeff: float = 1.6
    throttle_temp: float = 70.0
    tick_s: float = 0.01
    noise_rel: float = 0.02
    name: str = "tx2-like"

    def __post_init__(self):
        object.__setattr__(self, "freq_table", tuple(float(f) for f in self.freq_table))
        object.__setattr__(self, "core_efficiency", tuple(float(e) for e in self.core_efficiency))
        if self.core_count < 1:
            raise ValueError("core_count must be >= 1")
        if len(self.freq_table) < 1 or any(f <= 0 for f in self.freq_table):
            raise ValueError("freq_table needs positive entries")
        if any(b <= a for a, b in zip(self.freq_table, self.freq_table[1:])):
            raise ValueError("freq_table must be strictly increasing")
        if len(self.core_efficiency) != self.core_count:
            raise ValueError("core_efficiency length must equal core_count")
        if any(not 0 < e <= 1 for e in self.core_efficiency):
            raise ValueError("core_efficiency entries must lie in (0, 1]")
        if self.thermal_resistance <= 0 or self.thermal_time_constant <= 0:
            raise ValueError("thermal constants must be positive")
        if self.power_static_w < 0 or self.power_dyn_coeff <= 0:
            raise ValueError("invalid power constants")
        if self.tick_s <= 0:
            raise ValueError("tick_s must be positive")
        if self.throttle_temp <= self.thermal_ambient:
            raise ValueError("throttle_temp must exceed thermal_ambient")
        if self.noise_rel < 0:
            raise ValueError("noise_rel must be >= 0")

    @property
    def m(self) -> int:
        return self.core_count

    @property
    def n(self) -> int:
        return len(self.freq_table)

    @property
    def f_min(self) -> float:
        return self.freq_table[0]

    @property
    def f_max(self) -> float:
        return self.freq_table[-1]

    @property
    def tdp_w(self) -> float:
        """Power with every core busy at maximum frequency."""
        return self.power_static_w + self.core_count * self.power_dyn_coeff

    def to_dict(self) -> dict:
        d = asdict(self)
        d["freq_table"] = list(self.freq_table)
        d["core_efficiency"] = list(self.core_efficiency)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlatformSpec":
        return cls(**d)


def default_efficiency(m: int) -> tuple[float, ...]:
    """Two performance cores at 1.0, the rest at 0.8."""
    return tuple(1.0 if i < 2 else 0.8 for i in range(m))


@dataclass(frozen=True)
class WorkloadSpec:
    work_units: float = 4.0
    parallel_fraction: float = 0.9
    mem_bound_factor: float = 0.3
    sync_overhead_per_core: float = 0.01
    name: str = "default"
    feature_vector: dict | None = None

    def __post_init__(self):
        if self.work_units <= 0:
            raise ValueError("work_units must be positive")
        if not 0 <= self.parallel_fraction <= 1:
            raise ValueError("parallel_fraction must lie in [0, 1]")
        if not 0 <= self.mem_bound_factor <= 1:
            raise ValueError("mem_bound_factor must lie in [0, 1]")
        if self.sync_overhead_per_core < 0:
            raise ValueError("sync_overhead_per_core must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "WorkloadSpec":
        return cls(**d)


@dataclass(frozen=True)
class SimState:
    temps_c: tuple[float, ...]
    util_active: float = 0.0
    util_stall: float = 0.0
    util_idle: float = 1.0
    energy_j: float = 0.0
    time_s: float = 0.0
    last_power_w: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "temps_c", tuple(float(t) for t in self.temps_c))

    @property
    def utilization(self) -> float:
        """Busy / (busy + idle); counts stall as busy, as utilisation governors do."""
        return self.util_active + self.util_stall

    def check(self) -> "SimState":
        vals = (*self.temps_c, self.util_active, self.util_stall, self.util_idle,
                self.energy_j, self.time_s, self.last_power_w)
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteState("state contains non-finite values")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["temps_c"] = list(self.temps_c)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimState":
        return cls(**d)


def initial_state(spec: PlatformSpec) -> SimState:
    return SimState(temps_c=(spec.thermal_ambient,) * spec.core_count)


@dataclass(frozen=True)
class StepOutcome:
    makespan_s: float
    energy_j: float
    peak_temp_c: float
    end_state: SimState
    throttled: bool
    mean_power_w: float = 0.0
    temp_trace: tuple[tuple[float, ...], ...] | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "makespan_s": self.makespan_s,
            "energy_j": self.energy_j,
            "peak_temp_c": self.peak_temp_c,
            "throttled": self.throttled,
            "mean_power_w": self.mean_power_w,
            "end_state": self.end_state.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class Watchdog(Protocol):
    period_s: float

    def check(self, temps: Sequence[float], time_s: float) -> int | None:
        """Return a frequency index to force until the next check, or None."""


def thermal_step(spec: PlatformSpec, temps, power_per_core, dt: float | None = None) -> np.ndarray:
    """One explicit-Euler step of the per-core RC model."""
    temps = np.asarray(temps, dtype=float)
    power = np.asarray(power_per_core, dtype=float)
    if temps.shape != (spec.core_count,) or power.shape != (spec.core_count,):
        raise ValueError(f"expected {spec.core_count} temperatures and powers")
    dt = spec.tick_s if dt is None else dt
    with np.errstate(invalid="ignore", over="ignore"):
        out = temps + (dt / spec.thermal_time_constant) * (
            spec.thermal_ambient + spec.thermal_resistance * power - temps)
    if not np.all(np.isfinite(out)):
        raise NonFiniteTemperature("temperature update produced non-finite values")
    return out


def static_power_per_core(spec: PlatformSpec) -> float:
    return spec.power_static_w / spec.core_count


def core_power(spec: PlatformSpec, freq_norm: float, busy_fraction) -> np.ndarray:
    """Per-core power given busy fractions in [0, 1]."""
    busy = np.asarray(busy_fraction, dtype=float)
    return static_power_per_core(spec) + spec.power_dyn_coeff * freq_norm ** 3 * busy


def _draw_noise(spec: PlatformSpec, seed: int) -> tuple[float, float]:
    if spec.noise_rel == 0:
        return 1.0, 1.0
    rng = np.random.default_rng(seed)
    eps_t, eps_p = rng.normal(0.0, spec.noise_rel, size=2)
    # clip keeps the multipliers positive under extreme sigma
    return max(1.0 + eps_t, 0.5), max(1.0 + eps_p, 0.5)


def execute(spec: PlatformSpec, wl: WorkloadSpec, action: HierAction, state: SimState,
            seed: int = 0, watchdog: Watchdog | None = None,
            record_trace: bool = False) -> StepOutcome:
    """Run the whole workload once under a fixed allocation."""
    m = spec.core_count
    try:
        action.validate(m, spec.n)
    except InvalidAction:
        raise
    state.check()

    time_mult, power_mult = _draw_noise(spec, seed)
    eff = np.asarray(spec.core_efficiency)
    active = list(action.active_cores)
    lead = active[0]
    mb = wl.mem_bound_factor

    remaining = [wl.work_units * (1.0 - wl.parallel_fraction),
                 wl.work_units * wl.parallel_fraction,
                 wl.sync_overhead_per_core * len(active)]
    phase = 0
    while phase < 3 and remaining[phase] <= 0:
        phase += 1

    temps = np.asarray(state.temps_c, dtype=float)
    energy = 0.0
    t = 0.0
    peak = float(temps.max())
    throttled = False
    busy_active = np.zeros(m)
    busy_stall = np.zeros(m)
    trace = [tuple(temps)] if record_trace else None
    forced: int | None = None
    next_check = 0.0
    last_power = 0.0
    static_pc = static_power_per_core(spec)
    active_mask = np.zeros(m)
    active_mask[active] = 1.0
    lead_mask = np.zeros(m)
    lead_mask[lead] = 1.0
    active_rate_sum = float(eff[active].sum())

    while phase < 3:
        if watchdog is not None and t >= next_check - 1e-12:
            forced = watchdog.check(tuple(temps), state.time_s + t)
            next_check += watchdog.period_s
        over = bool(np.any(temps > spec.throttle_temp))
        if over:
            f_idx = 0
        elif forced is not None:
            f_idx = min(forced, action.freq_index)
        else:
            f_idx = action.freq_index
        fn = spec.freq_table[f_idx] / spec.f_max
        unit_time = ((1.0 - mb) / fn + mb) * time_mult  # seconds per unit at eff 1.0
        active_share = ((1.0 - mb) / fn) / ((1.0 - mb) / fn + mb) if mb < 1 else 0.0

        left = spec.tick_s
        busy = np.zeros(m)
        while left > 1e-15 and phase < 3:
            if phase == 0:
                rate = eff[lead] / unit_time
                need = remaining[0] / rate
                use = min(left, need)
                remaining[0] -= use * rate
                busy += lead_mask * use
                busy_active[lead] += use * active_share
                busy_stall[lead] += use * (1.0 - active_share)
            elif phase == 1:
                rate = active_rate_sum / unit_time
                need = remaining[1] / rate
                use = min(left, need)
                remaining[1] -= use * rate
                busy += active_mask * use
                busy_active[active] += use * active_share
                busy_stall[active] += use * (1.0 - active_share)
            else:
                need = remaining[2]
                use = min(left, need)
                remaining[2] -= use
                busy += active_mask * use
                busy_stall[active] += use
            left -= use
            if use >= need:
                remaining[phase] = 0.0
                phase += 1
                while phase < 3 and remaining[phase] <= 0:
                    phase += 1
        dt = spec.tick_s - left
        if dt <= 0:
            break
        p_core = static_pc + spec.power_dyn_coeff * fn ** 3 * (busy / dt) * power_mult
        last_power = float(p_core.sum())
        energy += last_power * dt
        temps = thermal_step(spec, temps, p_core, dt)
        t += dt
        tmax = float(temps.max())
        if tmax > peak:
            peak = tmax
        if tmax > spec.throttle_temp:
            throttled = True
        if trace is not None:
            trace.append(tuple(temps))

    total_core_time = m * t
    ua = float(busy_active.sum() / total_core_time)
    us = float(busy_stall.sum() / total_core_time)
    end = SimState(
        temps_c=tuple(temps),
        util_active=ua,
        util_stall=us,
        util_idle=1.0 - ua - us,
        energy_j=state.energy_j + energy,
        time_s=state.time_s + t,
        last_power_w=last_power,
    ).check()
    return StepOutcome(
        makespan_s=t,
        energy_j=energy,
        peak_temp_c=peak,
        end_state=end,
        throttled=throttled,
        mean_power_w=energy / t,
        temp_trace=tuple(trace) if trace is not None else None,
    )


def idle(spec: PlatformSpec, state: SimState, seconds: float) -> SimState:
    """Let the platform sit idle (static power only) for ``seconds``."""
    temps = np.asarray(state.temps_c, dtype=float)
    p = np.full(spec.core_count, static_power_per_core(spec))
    ticks = int(round(seconds / spec.tick_s))
    for _ in range(ticks):
        temps = thermal_step(spec, temps, p)
    return replace(state, temps_c=tuple(temps), energy_j=state.energy_j + spec.power_static_w * ticks * spec.tick_s,
                   time_s=state.time_s + ticks * spec.tick_s, util_active=0.0, util_stall=0.0, util_idle=1.0,
                   last_power_w=spec.power_static_w)


class PlatformSim:
    """Single-owner simulator instance; owns its state and RNG stream."""

    def __init__(self, spec: PlatformSpec, seed: int = 0):
        self.spec = spec
        self._rng = np.random.default_rng(seed)
        self.state = initial_state(spec)

    def reset(self) -> SimState:
        self.state = initial_state(self.spec)
        return self.state

    def run(self, wl: WorkloadSpec, action: HierAction,
            watchdog: Watchdog | None = None, record_trace: bool = False) -> StepOutcome:
        seed = int(self._rng.integers(0, 2**31 - 1))
        out = execute(self.spec, wl, action, self.state, seed, watchdog, record_trace)
        self.state = out.end_state
        return out


WatchdogFn = Callable[[Sequence[float], float], "int | None"]
