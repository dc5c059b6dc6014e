import json

import numpy as np
import pytest

from dvfsmarl.actions import identity_action
from dvfsmarl.env_model import (ArchitectureKind, DynamicsModel, RegressorConfig, derive_thermal, fcn_loss_and_grad,
                                param_count, predict, predicted_core_power, relax_temperatures, train,
                                transitions_to_arrays)
from dvfsmarl.errors import (DimensionMismatch, EmptyDataset, InvalidDims, MissingChannels, UntrainedModel)
from dvfsmarl.platform_sim import PlatformSpec, WorkloadSpec, execute, idle, initial_state, thermal_step
from dvfsmarl.transfer import r2
from dvfsmarl.transition import Transition


# parameter counts -----------------------------------------------------------

def test_conv1d_worked_example():
    assert param_count(ArchitectureKind("Conv1D", kernel=3, c_out=64), 20) == 3904


def test_fcn_unit_dims():
    assert param_count("FCN", 1, 1, 1) == 4


def test_fcn_and_rnn_formula_values():
    # the printed figures 4950 and 6530 disagree with the formulas; the formulas win
    assert param_count("FCN", 20, 128, 18) == 20 * 128 + 128 * 18 + 128 + 18 == 5010
    assert param_count("RNN", 20, 64, 18) == 20 * 64 + 64 * 64 + 64 + 64 * 18 + 18 == 6610
    assert param_count("LSTM", 20, 64, 18) == 4 * 6610


def test_attention_is_flagged_estimate():
    k = ArchitectureKind("Attention", heads=4)
    assert k.is_estimate and not ArchitectureKind("FCN").is_estimate
    assert param_count(k, 10, 8) > 0


def test_invalid_dims():
    with pytest.raises(InvalidDims):
        param_count("FCN", 0, 1, 1)
    with pytest.raises(InvalidDims):
        param_count("FCN", 3, 0, 1)
    with pytest.raises(InvalidDims):
        ArchitectureKind("GRU")
    with pytest.raises(InvalidDims):
        ArchitectureKind("Conv1D", kernel=0)
    with pytest.raises(InvalidDims):
        RegressorConfig(0, 4, 1)


@pytest.mark.parametrize("dims", [(1, 1, 1), (14, 64, 13), (20, 128, 18)])
def test_allocated_scalars_match_fcn_formula(dims):
    model = DynamicsModel(RegressorConfig(*dims))
    assert model.n_params == param_count("FCN", *dims)


# training -------------------------------------------------------------------

def test_constant_function_fit():
    x = np.tile([[0.2, 0.7]], (20, 1))
    y = np.tile([[1.5, -0.5]], (20, 1))
    model = DynamicsModel(RegressorConfig(2, 8, 2, learning_rate=0.05, epochs=300))
    model.fit(x, y)
    assert np.abs(model.predict_batch(x[:1])[0] - [1.5, -0.5]).max() < 1e-3


def test_linear_oracle_r2():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 2))
    x = rng.uniform(-1, 1, size=(400, 3))
    y = x @ A
    model = DynamicsModel(RegressorConfig(3, 32, 2, learning_rate=0.05, epochs=300, seed=1))
    model.fit(x[:300], y[:300])
    pred = model.predict_batch(x[300:])
    for j in range(2):
        assert r2(pred[:, j], y[300:, j]) >= 0.99


def simulator_transitions(n, seed=0):
    spec = PlatformSpec()
    wl = WorkloadSpec(work_units=1.0)
    rng = np.random.default_rng(seed)
    out = []
    state = initial_state(spec)
    for _ in range(n):
        c, f = int(rng.integers(1, 7)), int(rng.integers(0, 12))
        if rng.random() < 0.3:
            state = idle(spec, state, float(rng.uniform(0, 4)))
        res = execute(spec, wl, identity_action(6, c, f), state, int(rng.integers(2**31 - 1)))
        s = tuple(np.array(state.temps_c) / 100.0)
        s2 = tuple(np.array(res.end_state.temps_c) / 100.0)
        out.append(Transition(s, 0, 0.0, s2, action_vec=(c / 6, f / 11)))
        state = res.end_state
    return out


def test_simulator_next_temperature_r2():
    data = simulator_transitions(500)
    cfg = RegressorConfig(8, 64, 7, learning_rate=0.2, epochs=300)
    model = train(DynamicsModel(cfg), data[:400])
    x, y = transitions_to_arrays(data[400:])
    pred = model.predict_batch(x)
    assert r2(pred[:, :6].ravel(), y[:, :6].ravel()) >= 0.9


def test_training_loss_trend_and_determinism():
    data = simulator_transitions(120, seed=1)
    cfg = RegressorConfig(8, 16, 7, learning_rate=0.05, epochs=60, seed=4)
    a = train(DynamicsModel(cfg), data)
    b = train(DynamicsModel(cfg), data)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    h = np.convolve(a.train_loss_history, np.ones(10) / 10, mode="valid")
    assert h[-1] < h[0]


def test_train_leaves_input_untouched():
    data = simulator_transitions(30)
    base = DynamicsModel(RegressorConfig(8, 8, 7, epochs=5))
    train(base, data)
    assert not base.trained


def test_train_errors():
    model = DynamicsModel(RegressorConfig(3, 4, 2))
    with pytest.raises(EmptyDataset):
        train(model, [])
    with pytest.raises(DimensionMismatch):
        model.fit(np.zeros((4, 2)), np.zeros((4, 2)))
    with pytest.raises(DimensionMismatch):
        transitions_to_arrays([Transition((0.0,), 0, 0.0, (0.0,))])


# predict --------------------------------------------------------------------

def test_predict_requires_training():
    with pytest.raises(UntrainedModel):
        predict(DynamicsModel(RegressorConfig(3, 4, 2)), (0.0, 0.0), (0.0,))


def test_predict_is_pure_and_in_range():
    data = simulator_transitions(200, seed=2)
    model = train(DynamicsModel(RegressorConfig(8, 32, 7, learning_rate=0.05, epochs=100)), data)
    before = {k: v.copy() for k, v in model.params.items()}
    s, av = data[5].state, data[5].action_vec
    a = predict(model, s, av)
    b = predict(model, s, av)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]
    for k in before:
        assert np.array_equal(before[k], model.params[k])
    _, y = transitions_to_arrays(data)
    lo, hi = y.min(axis=0), y.max(axis=0)
    span = hi - lo
    nxt = np.asarray(a[0])
    assert np.all(nxt >= lo[:-1] - 0.1 * span[:-1]) and np.all(nxt <= hi[:-1] + 0.1 * span[:-1])


def test_fcn_gradients_match_finite_differences():
    # 2-2-2 net: 2*2 + 2 + 2*2 + 2 = 12 scalars
    model = DynamicsModel(RegressorConfig(2, 2, 2, seed=3))
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
    model.params["b1"] += 0.5  # keep units active so the kink is not straddled
    _, grads = fcn_loss_and_grad(model.params, x, y)
    h = 1e-6
    for k, p in model.params.items():
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            lp, _ = fcn_loss_and_grad(model.params, x, y)
            p[idx] = old - h
            lm, _ = fcn_loss_and_grad(model.params, x, y)
            p[idx] = old
            num = (lp - lm) / (2 * h)
            assert abs(num - grads[k][idx]) <= 1e-4 * max(abs(num), 1e-8) + 1e-10, (k, idx)


def test_dropout_passes_return_mean_and_std():
    data = simulator_transitions(60)
    model = train(DynamicsModel(RegressorConfig(8, 16, 7, epochs=20)), data)
    x, _ = transitions_to_arrays(data[:3])
    mean, std = model.predict_with_dropout(x, passes=10, rate=0.2)
    assert mean.shape == std.shape == (3, 7)
    assert np.all(std >= 0) and np.any(std > 0)


def test_checkpoint_round_trip(tmp_path):
    data = simulator_transitions(40)
    model = train(DynamicsModel(RegressorConfig(8, 8, 7, epochs=10)), data)
    model.save(tmp_path / "m.json")
    back = DynamicsModel.load(tmp_path / "m.json")
    x, _ = transitions_to_arrays(data)
    assert np.array_equal(back.predict_batch(x), model.predict_batch(x))
    d = model.to_dict()
    d["version"] = 99
    with pytest.raises(ValueError):
        DynamicsModel.from_dict(d)


# derive_thermal -------------------------------------------------------------

def test_zero_power_relaxes_toward_ambient():
    spec = PlatformSpec(power_static_w=0.0)
    hot = np.full(6, 60.0)
    out = derive_thermal({"power_w": 0.0, "makespan_s": 1.0}, spec, hot, [0, 1])
    assert np.all(out < hot) and np.all(out > spec.thermal_ambient)


def test_derive_thermal_equals_thermal_step_on_true_power():
    spec = PlatformSpec()
    temps = np.linspace(30, 45, 6)
    active = [0, 2, 3]
    power_w = 4.2
    p = predicted_core_power(spec, power_w, active)
    assert p.sum() == pytest.approx(power_w)
    expect = temps.copy()
    for _ in range(150):
        expect = thermal_step(spec, expect, p)
    got = derive_thermal({"power_w": power_w, "makespan_s": 1.5}, spec, temps, active)
    assert np.array_equal(got, expect)
    assert np.array_equal(relax_temperatures(spec, temps, p, 150), expect)


def test_derive_thermal_monotone_in_power():
    spec = PlatformSpec()
    temps = np.full(6, 35.0)
    lo = derive_thermal({"power_w": 2.0, "makespan_s": 1.0}, spec, temps, [0, 1])
    hi = derive_thermal({"power_w": 5.0, "makespan_s": 1.0}, spec, temps, [0, 1])
    assert np.all(hi >= lo) and np.any(hi > lo)


def test_derive_thermal_missing_channels():
    with pytest.raises(MissingChannels):
        derive_thermal({"makespan_s": 1.0}, PlatformSpec(), np.full(6, 30.0), [0])
