"""Episodic wrapper around the simulator for the two-agent scheme.

One step is one complete workload run under a single joint decision.  An
episode is a queue of ``runs_per_episode`` runs executed back to back, so
heat from one run carries into the next.

Profiler observation (all dimensionless):

====  ==========================================================
0-2   workload descriptor of the *next* run (parallel share,
      memory-bound share, work units / 10)
3     log(previous run makespan / performance-governor makespan)
4     log(previous run energy / powersave-governor energy)
5     previous run mean power / TDP
6-8   previous run utilization split (active, stall, idle)
9     mean thermal headroom, 10 hottest-core headroom
11    fraction of the episode queue completed
====  ==========================================================

Temperature observation: per-core headroom followed by the normalized core
count and frequency the profiler just chose, so the second agent acts with
knowledge of the first agent's decision.

The makespan and energy channels are log-ratios because the raw ratios span
more than an order of magnitude (one slow core versus all fast cores), which
would leave a min-max scaled regressor little resolution near the targets.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..actions import HierAction, decode_profiler, decode_temperature, identity_action
from ..errors import HorizonExceeded
from ..platform_sim import (PlatformSim, PlatformSpec, SimState, StepOutcome, WorkloadSpec,
                            execute, initial_state)
from .rewards import C_ST, C_TH, TEMP_THRESHOLD_C, RewardBundle, TargetsBaseline, profiler_reward, temp_reward
from .safety import SafetyEvent, SafetyLayer

PROFILER_DIM = 12
I_MAKESPAN, I_ENERGY, I_POWER = 3, 4, 5


def measure_targets(spec: PlatformSpec, wl: WorkloadSpec, seed: int = 0) -> TargetsBaseline:
    """Powersave energy and performance makespan, each from one run starting at ambient."""
    start = initial_state(spec)
    ps = execute(spec, wl, identity_action(spec.m, spec.m, 0), start, seed)
    perf = execute(spec, wl, identity_action(spec.m, spec.m, spec.n - 1), start, seed)
    return TargetsBaseline(ps.energy_j, perf.makespan_s)


def coolest_first(temps: Sequence[float]) -> tuple[int, ...]:
    return tuple(int(i) for i in np.argsort(np.asarray(temps, dtype=float), kind="stable"))


@dataclass
class StepResult:
    profiler_state: tuple[float, ...]
    rewards: RewardBundle
    done: bool
    outcome: StepOutcome
    action: HierAction
    events: list[SafetyEvent] = field(default_factory=list)


class HierEnv:
    def __init__(self, spec: PlatformSpec, workloads: Sequence[WorkloadSpec],
                 targets: Sequence[TargetsBaseline] | None = None, runs_per_episode: int = 5,
                 c_th: float = C_TH, c_st: float = C_ST, temp_threshold: float = TEMP_THRESHOLD_C,
                 seed: int = 0, safety: SafetyLayer | None = None):
        if not workloads:
            raise ValueError("need at least one workload")
        if runs_per_episode < 1:
            raise ValueError("runs_per_episode must be >= 1")
        self.spec = spec
        self.workloads = list(workloads)
        self.targets = list(targets) if targets is not None else [
            measure_targets(spec, wl, seed) for wl in self.workloads]
        if len(self.targets) != len(self.workloads):
            raise ValueError("one target per workload")
        self.runs_per_episode = runs_per_episode
        self.c_th, self.c_st = c_th, c_st
        self.temp_threshold = temp_threshold
        self.seed = seed
        self.safety = safety
        self.sim = PlatformSim(spec, seed)
        self.step_index = 0
        self.last: StepOutcome | None = None

    # dimensions ----------------------------------------------------------------
    @property
    def profiler_dim(self) -> int:
        return PROFILER_DIM

    @property
    def temp_dim(self) -> int:
        return self.spec.m + 2

    @property
    def n_profiler_actions(self) -> int:
        return self.spec.m * self.spec.n

    @property
    def n_temp_actions(self) -> int:
        return self.spec.m * self.spec.m

    def clone(self) -> "HierEnv":
        return copy.deepcopy(self)

    # episode control -------------------------------------------------------
    def workload_at(self, k: int) -> tuple[WorkloadSpec, TargetsBaseline]:
        i = k % len(self.workloads)
        return self.workloads[i], self.targets[i]

    def reset(self, seed: int | None = None) -> tuple[float, ...]:
        self.sim = PlatformSim(self.spec, self.seed if seed is None else seed)
        self.step_index = 0
        self.last = None
        return self.profiler_state()

    @property
    def state(self) -> SimState:
        return self.sim.state

    @property
    def done(self) -> bool:
        return self.step_index >= self.runs_per_episode

    # observations ----------------------------------------------------------------
    def headroom(self, temps) -> np.ndarray:
        s = self.spec
        return (s.throttle_temp - np.asarray(temps, dtype=float)) / (s.throttle_temp - s.thermal_ambient)

    def temps_from_headroom(self, h) -> np.ndarray:
        s = self.spec
        return s.throttle_temp - np.asarray(h, dtype=float) * (s.throttle_temp - s.thermal_ambient)

    def profiler_state(self) -> tuple[float, ...]:
        wl, tg = self.workload_at(self.step_index)
        st = self.sim.state
        h = self.headroom(st.temps_c)
        if self.last is None:
            perf = (0.0, 0.0, 0.0)
        else:
            perf = (math.log(self.last.makespan_s / tg.makespan_performance_s),
                    math.log(self.last.energy_j / tg.energy_powersave_j),
                    self.last.mean_power_w / self.spec.tdp_w)
        return (wl.parallel_fraction, wl.mem_bound_factor, wl.work_units / 10.0, *perf,
                st.util_active, st.util_stall, st.util_idle,
                float(h.mean()), float(h.min()), self.step_index / self.runs_per_episode)

    def action_vec(self, profiler_index: int) -> tuple[float, float]:
        cores, f = decode_profiler(profiler_index, self.spec.m, self.spec.n)
        return cores / self.spec.m, f / max(self.spec.n - 1, 1)

    def temp_state(self, profiler_index: int, temps=None) -> tuple[float, ...]:
        temps = self.sim.state.temps_c if temps is None else temps
        return (*(float(v) for v in self.headroom(temps)), *self.action_vec(profiler_index))

    def profiler_channels(self, s_p: Sequence[float], k: int | None = None) -> dict:
        """Physical quantities implied by a (possibly predicted) profiler observation."""
        _, tg = self.workload_at(self.step_index if k is None else k)
        return {
            "makespan_s": math.exp(min(float(s_p[I_MAKESPAN]), 50.0)) * tg.makespan_performance_s,
            "energy_j": math.exp(min(float(s_p[I_ENERGY]), 50.0)) * tg.energy_powersave_j,
            "power_w": max(float(s_p[I_POWER]), 0.0) * self.spec.tdp_w,
        }

    def decode(self, profiler_index: int, temp_index: int, temps=None) -> HierAction:
        temps = self.sim.state.temps_c if temps is None else temps
        cores, f = decode_profiler(profiler_index, self.spec.m, self.spec.n)
        return HierAction(cores, f, decode_temperature(temp_index, self.spec.m, coolest_first(temps)))

    # dynamics ----------------------------------------------------------------------
    def step(self, profiler_index: int, temp_index: int) -> StepResult:
        return self.step_action(self.decode(profiler_index, temp_index))

    def step_action(self, action: HierAction) -> StepResult:
        """Execute a joint decision directly (used by governors and fixed policies)."""
        if self.done:
            raise HorizonExceeded(f"episode already ran {self.runs_per_episode} runs")
        wl, tg = self.workload_at(self.step_index)
        action.validate(self.spec.m, self.spec.n)
        events: list[SafetyEvent] = []
        watchdog = None
        threshold = self.temp_threshold
        if self.safety is not None:
            action, events = self.safety.filter(action, self.sim.state)
            watchdog = self.safety.watchdog()
            threshold = min(threshold, self.safety.temp_threshold)
        n_before = len(self.safety.events) if self.safety is not None else 0
        out = self.sim.run(wl, action, watchdog=watchdog)
        if self.safety is not None:
            events = events + self.safety.events[n_before:]
        bundle = profiler_reward(out.energy_j, out.makespan_s, tg, self.c_th, self.c_st)
        bundle = RewardBundle(temp_reward(out.end_state.temps_c, threshold),
                              bundle.r_energy, bundle.r_makespan, bundle.r_profiler)
        self.last = out
        self.step_index += 1
        return StepResult(self.profiler_state(), bundle, self.done, out, action, events)
