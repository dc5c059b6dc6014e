import numpy as np
import pytest

from dvfsmarl.actions import identity_action
from dvfsmarl.env_model import DynamicsModel, RegressorConfig
from dvfsmarl.governors import govern
from dvfsmarl.hier_marl import HierEnv
from dvfsmarl.hier_marl.safety import (CAP_APPLIED, CRITICAL_THERMAL, LOCK_RELEASED, PREDICTION_VETOED,
                                       THERMAL_WARNING, SafetyConfig, SafetyLayer, core_cap_count,
                                       freq_cap_index, model_uncertainty, safety_filter)
from dvfsmarl.platform_sim import PlatformSpec, SimState, WorkloadSpec, execute, initial_state

SPEC = PlatformSpec()


def state(temps, **kw):
    return SimState(temps_c=tuple(temps), **kw)


def layer(**kw):
    return SafetyLayer(SafetyConfig(**kw), SPEC)


def test_conservative_clamp_to_floor_half():
    L = layer()
    raw = identity_action(6, 6, 11)
    act, events = safety_filter(L, raw, state([30.0] * 6))
    assert act.freq_index == 5 == freq_cap_index(0.5, 12)
    assert act.core_count == 3 == core_cap_count(0.5, 6)
    assert [e.kind for e in events] == [CAP_APPLIED]


def test_cap_formulas():
    assert freq_cap_index(0.65, 12) == 7
    assert freq_cap_index(0.8, 12) == 8
    assert freq_cap_index(1.0, 12) == 11
    assert core_cap_count(0.5, 5) == 3


def test_relaxation_schedule():
    L = layer()
    seen = {}
    for n in range(0, 25):
        L.samples = n
        seen[n] = L.cap
    assert seen[0] == seen[4] == 0.5
    assert seen[5] == seen[9] == 0.65
    assert seen[10] == seen[19] == 0.8
    assert seen[20] == seen[24] == 1.0


def test_record_finetune_and_mape_gate():
    L = layer()
    assert L.record_finetune(10) == 0.8
    assert L.record_finetune(10, validation_mape=80.0) == 0.8  # gate holds the cap
    assert L.record_finetune(10, validation_mape=12.0) == 1.0
    assert L.exploration_enabled
    assert L.temp_threshold == 50.0


def test_conservative_tightens_temperature_threshold():
    L = layer()
    assert L.temp_threshold == 40.0
    assert not L.exploration_enabled


def test_non_conservative_passes_through():
    L = SafetyLayer(SafetyConfig(), SPEC, conservative=False)
    raw = identity_action(6, 6, 11)
    act, events = L.filter(raw, state([30.0] * 6))
    assert act == raw and events == []


def test_uncertainty_veto_uses_ondemand():
    L = SafetyLayer(SafetyConfig(), SPEC, conservative=False)
    st = state([30.0] * 6, util_active=0.5, util_stall=0.45, util_idle=0.05)
    raw = identity_action(6, 2, 3)
    act, events = L.filter(raw, st, model_uncertainty=0.3)
    assert act == govern("ondemand", st, SPEC)
    assert events[0].kind == PREDICTION_VETOED
    act2, events2 = L.filter(raw, st, model_uncertainty=0.1)
    assert act2 == raw and events2 == []


def test_warning_forces_min_frequency():
    L = SafetyLayer(SafetyConfig(), SPEC, conservative=False)
    act, events = L.filter(identity_action(6, 6, 11), state([61.0] + [40.0] * 5))
    assert act.freq_index == 0 and act.core_count == 6
    assert [e.kind for e in events] == [THERMAL_WARNING]


def test_critical_lock_and_release():
    L = SafetyLayer(SafetyConfig(), SPEC, conservative=False)
    act, events = L.filter(identity_action(6, 4, 9), state([66.0, 40, 40, 40, 40, 40]))
    assert L.locked and act == identity_action(6, 6, 0)
    assert events[0].kind == CRITICAL_THERMAL
    # still locked between reenable and critical
    act, _ = L.filter(identity_action(6, 4, 9), state([55.0] * 6))
    assert L.locked and act.freq_index == 0
    act, events = L.filter(identity_action(6, 4, 9), state([49.0] * 6))
    assert not L.locked and act == identity_action(6, 4, 9)
    assert events[0].kind == LOCK_RELEASED


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        SafetyConfig(watchdog_warn_c=70.0)
    with pytest.raises(ValueError):
        SafetyConfig(conservative_freq_cap=0.0)
    c = SafetyConfig()
    assert SafetyConfig.from_dict(c.to_dict()) == c
    assert c.relaxation_schedule == ((5, 0.65), (10, 0.8), (20, 1.0))


def test_model_uncertainty_is_dropout_spread():
    m = DynamicsModel(RegressorConfig(2, 16, 1, epochs=5))
    m.fit(np.random.default_rng(0).normal(size=(20, 2)), np.random.default_rng(1).normal(size=(20, 1)))
    u = model_uncertainty(m, [[0.1, 0.2]], passes=10)
    assert u > 0
    assert model_uncertainty(m, [[0.1, 0.2]], passes=10) == u


HOT = PlatformSpec(thermal_resistance=40.0, thermal_time_constant=1.0, throttle_temp=90.0, noise_rel=0.0)


def hottest_rise_per_tick(spec):
    p_max = spec.power_static_w / spec.core_count + spec.power_dyn_coeff
    return spec.tick_s / spec.thermal_time_constant * (spec.thermal_ambient + spec.thermal_resistance * p_max)


def adversarial_trace(cfg: SafetyConfig, runs=6, start_c=None):
    L = SafetyLayer(cfg, HOT, conservative=False)
    env = HierEnv(HOT, [WorkloadSpec(work_units=8.0)], runs_per_episode=runs, safety=L)
    env.reset(seed=0)
    if start_c is not None:
        env.sim.state = SimState(temps_c=(start_c,) * 6)
    peaks = []
    while not env.done:
        st = env.state
        act, _ = L.filter(identity_action(6, 6, 11), st)
        out = execute(HOT, WorkloadSpec(work_units=8.0), act, st, 0, watchdog=L.watchdog(), record_trace=True)
        env.sim.state = out.end_state
        env.step_index += 1
        peaks.append(np.array(out.temp_trace).max(axis=1))
    return np.concatenate(peaks), L


def test_adversarial_policy_never_sustains_critical():
    cfg = SafetyConfig(watchdog_period_s=HOT.tick_s)
    trace, L = adversarial_trace(cfg)
    # unsafe without the layer
    raw = execute(HOT, WorkloadSpec(work_units=8.0), identity_action(6, 6, 11), initial_state(HOT), 0)
    assert raw.peak_temp_c > cfg.watchdog_critical_c + 5
    assert trace.max() <= cfg.watchdog_critical_c + hottest_rise_per_tick(HOT)
    # the warning tier already holds the minimum frequency below the critical point
    assert any(e.kind == THERMAL_WARNING for e in L.events)


def test_preheated_start_locks_then_releases():
    cfg = SafetyConfig(watchdog_period_s=HOT.tick_s)
    trace, L = adversarial_trace(cfg, runs=12, start_c=68.0)
    kinds = [e.kind for e in L.events]
    assert kinds[0] == CRITICAL_THERMAL
    assert LOCK_RELEASED in kinds
    first_release = kinds.index(LOCK_RELEASED)
    released_at = L.events[first_release].detail["max_temp"]
    assert released_at < cfg.reenable_below_c
    # after the initial excursion nothing climbs back over the critical point
    cooled = int(np.argmax(trace < cfg.watchdog_critical_c))
    assert trace[cooled:].max() <= cfg.watchdog_critical_c + hottest_rise_per_tick(HOT)


def test_adversarial_with_coarse_watchdog_has_short_excursions():
    cfg = SafetyConfig()  # polls every 0.1 s
    trace, _ = adversarial_trace(cfg)
    over = trace > cfg.watchdog_critical_c
    longest, run = 0, 0
    for o in over:
        run = run + 1 if o else 0
        longest = max(longest, run)
    ticks_per_poll = int(round(cfg.watchdog_period_s / HOT.tick_s))
    assert longest <= ticks_per_poll
