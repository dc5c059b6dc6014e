"""Learned one-step environment model and parameter-count calculators.

The profiler model is a one-hidden-layer ReLU network trained with minibatch
gradient descent (plain SGD by default, Adam optional) on mean squared error.  Inputs and targets are min-max scaled
before training; predictions are mapped back to the original units.
"""

from __future__ import annotations

import copy as _copy
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import nn
from .errors import (DimensionMismatch, EmptyDataset, InvalidDims, MissingChannels,
                     UntrainedModel)
from .platform_sim import PlatformSpec, static_power_per_core, thermal_step
from .transfer import MinMaxScaler
from .transition import Transition

CHECKPOINT_FORMAT = "dvfsmarl.checkpoint"
CHECKPOINT_VERSION = 1


# Parameter counts -----------------------------------------------------------

KINDS = ("FCN", "Conv1D", "RNN", "LSTM", "Attention")


@dataclass(frozen=True)
class ArchitectureKind:
    kind: str
    kernel: int = 3
    c_out: int = 64
    heads: int = 4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidDims(f"unknown architecture {self.kind!r}")
        if min(self.kernel, self.c_out, self.heads) < 1:
            raise InvalidDims("architecture hyperparameters must be positive")

    @property
    def is_estimate(self) -> bool:
        """Attention's figure is a complexity order, not an exact parameter count."""
        return self.kind == "Attention"


def param_count(kind: ArchitectureKind | str, n_input: int, n_hidden: int = 0, n_output: int = 0) -> int:
    if isinstance(kind, str):
        kind = ArchitectureKind(kind)
    if n_input < 1:
        raise InvalidDims("n_input must be >= 1")
    k = kind.kind
    if k == "Conv1D":
        return kind.kernel * n_input * kind.c_out + kind.c_out
    if n_hidden < 1:
        raise InvalidDims("n_hidden must be >= 1")
    if k == "Attention":
        return (n_input + 2) ** 2 * kind.heads * n_hidden + (n_hidden + 1) * n_input
    if n_output < 1:
        raise InvalidDims("n_output must be >= 1")
    if k == "FCN":
        return n_input * n_hidden + n_hidden * n_output + n_hidden + n_output
    rnn = n_input * n_hidden + n_hidden * n_hidden + n_hidden + n_hidden * n_output + n_output
    return rnn if k == "RNN" else 4 * rnn


# Regressor ------------------------------------------------------------------

@dataclass(frozen=True)
class RegressorConfig:
    n_input: int
    n_hidden: int
    n_output: int
    learning_rate: float = 0.001
    epochs: int = 100
    seed: int = 0
    batch_size: int = 32
    optimizer: str = "sgd"

    def __post_init__(self):
        if min(self.n_input, self.n_hidden, self.n_output, self.epochs, self.batch_size) < 1:
            raise InvalidDims("dimensions, epochs and batch size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in nn.OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {nn.OPTIMIZERS}")

    def replace(self, **kw) -> "RegressorConfig":
        return replace(self, **kw)


_ORDER = ["w1", "b1", "w2", "b2"]


def fcn_forward(params: nn.Params, x: np.ndarray, dropout: float = 0.0,
                rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    pre = x @ params["w1"] + params["b1"]
    h = nn.relu(pre)
    if dropout > 0:
        keep = rng.random(h.shape) >= dropout
        h = h * keep / (1.0 - dropout)
    return h @ params["w2"] + params["b2"], pre


def fcn_loss_and_grad(params: nn.Params, x: np.ndarray, y: np.ndarray) -> tuple[float, nn.Params]:
    """MSE averaged over samples and outputs, with analytic gradients."""
    out, pre = fcn_forward(params, x)
    h = nn.relu(pre)
    diff = out - y
    scale = 2.0 / diff.size
    loss = float(np.mean(diff ** 2))
    d_out = diff * scale
    grads = {"w2": h.T @ d_out, "b2": d_out.sum(axis=0)}
    d_h = (d_out @ params["w2"].T) * (pre > 0)
    grads["w1"] = x.T @ d_h
    grads["b1"] = d_h.sum(axis=0)
    return loss, grads


class DynamicsModel:
    """Fully connected one-step model ``(state, action) -> outputs``."""

    kind = "dynamics_model"

    def __init__(self, config: RegressorConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        w1, b1 = nn.init_dense(rng, config.n_input, config.n_hidden)
        w2, b2 = nn.init_dense(rng, config.n_hidden, config.n_output)
        self.params: nn.Params = {"w1": w1, "b1": b1, "w2": w2, "b2": b2}
        self.train_loss_history: list[float] = []
        self.x_scaler = MinMaxScaler()
        self.y_scaler = MinMaxScaler()
        self.trained = False

    @property
    def n_params(self) -> int:
        return nn.count(self.params)

    def copy(self) -> "DynamicsModel":
        return _copy.deepcopy(self)

    def fit(self, x, y, refit_scalers: bool = True, identity_scalers: bool = False) -> "DynamicsModel":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 2 or y.ndim != 2 or len(x) != len(y):
            raise DimensionMismatch("x and y must be 2-D with matching row counts")
        if len(x) == 0:
            raise EmptyDataset("no samples to train on")
        if x.shape[1] != self.config.n_input or y.shape[1] != self.config.n_output:
            raise DimensionMismatch(
                f"got {x.shape[1]} inputs / {y.shape[1]} outputs, config expects "
                f"{self.config.n_input} / {self.config.n_output}")
        if identity_scalers:
            self.x_scaler = MinMaxScaler(np.zeros(x.shape[1]), np.ones(x.shape[1]))
            self.y_scaler = MinMaxScaler(np.zeros(y.shape[1]), np.ones(y.shape[1]))
        elif refit_scalers or not self.x_scaler.fitted:
            self.x_scaler.fit(x)
            self.y_scaler.fit(y)
        xn = self.x_scaler.transform(x)
        yn = self.y_scaler.transform(y)

        cfg = self.config
        rng = np.random.default_rng([cfg.seed, len(self.train_loss_history)])
        opt = nn.make_optimizer(cfg.optimizer, cfg.learning_rate)
        bs = min(cfg.batch_size, len(xn))
        for _ in range(cfg.epochs):
            order = rng.permutation(len(xn))
            for i in range(0, len(xn), bs):
                idx = order[i:i + bs]
                _, grads = fcn_loss_and_grad(self.params, xn[idx], yn[idx])
                opt.step(self.params, grads)
            loss, _ = fcn_loss_and_grad(self.params, xn, yn)
            self.train_loss_history.append(loss)
        self.trained = True
        return self

    def predict_batch(self, x) -> np.ndarray:
        if not self.trained:
            raise UntrainedModel("model has not been trained")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.config.n_input:
            raise DimensionMismatch(f"expected {self.config.n_input} inputs, got {x.shape[1]}")
        out, _ = fcn_forward(self.params, self.x_scaler.transform(x))
        return self.y_scaler.inverse(out)

    def predict_with_dropout(self, x, passes: int = 10, rate: float = 0.1,
                             seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Mean and std over ``passes`` dropout-perturbed forward passes (normalised output units)."""
        if not self.trained:
            raise UntrainedModel("model has not been trained")
        rng = np.random.default_rng(seed)
        xn = self.x_scaler.transform(np.atleast_2d(np.asarray(x, dtype=float)))
        outs = np.stack([fcn_forward(self.params, xn, rate, rng)[0] for _ in range(passes)])
        return outs.mean(axis=0), outs.std(axis=0)

    # Serialisation ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "config": asdict(self.config),
            "weights": nn.flatten(self.params, _ORDER).tolist(),
            "x_scaler": self.x_scaler.to_dict() if self.x_scaler.fitted else None,
            "y_scaler": self.y_scaler.to_dict() if self.y_scaler.fitted else None,
            "train_loss_history": list(self.train_loss_history),
            "trained": self.trained,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DynamicsModel":
        if d.get("format") != CHECKPOINT_FORMAT or d.get("kind") != cls.kind:
            raise ValueError("not a dynamics-model checkpoint")
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')}")
        model = cls(RegressorConfig(**d["config"]))
        shapes = {k: v.shape for k, v in model.params.items()}
        model.params = nn.unflatten(np.asarray(d["weights"]), shapes, _ORDER)
        if d["x_scaler"] is not None:
            model.x_scaler = MinMaxScaler.from_dict(d["x_scaler"])
            model.y_scaler = MinMaxScaler.from_dict(d["y_scaler"])
        model.train_loss_history = list(d["train_loss_history"])
        model.trained = bool(d["trained"])
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "DynamicsModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def transitions_to_arrays(transitions: Sequence[Transition]) -> tuple[np.ndarray, np.ndarray]:
    """Inputs are ``state + action_vec``; targets are ``next_state + [reward]``."""
    if len(transitions) == 0:
        raise EmptyDataset("no transitions")
    if any(t.action_vec is None for t in transitions):
        raise DimensionMismatch("model training needs action_vec on every transition")
    x = np.array([t.state + t.action_vec for t in transitions], dtype=float)
    y = np.array([t.next_state + (t.reward,) for t in transitions], dtype=float)
    return x, y


def train(model: DynamicsModel, transitions: Sequence[Transition]) -> DynamicsModel:
    """Return a trained copy; the input model is left untouched."""
    x, y = transitions_to_arrays(transitions)
    return model.copy().fit(x, y)


def predict(model: DynamicsModel, state: Sequence[float], action_vec: Sequence[float]):
    """-> (next_state_pred, reward_pred)."""
    out = model.predict_batch(np.concatenate([np.asarray(state, float), np.asarray(action_vec, float)]))[0]
    return out[:-1], float(out[-1])


# Thermal derivation ---------------------------------------------------------

def relax_temperatures(spec: PlatformSpec, temps, power_per_core, n_ticks: int) -> np.ndarray:
    temps = np.asarray(temps, dtype=float)
    for _ in range(n_ticks):
        temps = thermal_step(spec, temps, power_per_core)
    return temps


def predicted_core_power(spec: PlatformSpec, total_power_w: float, active_cores: Sequence[int]) -> np.ndarray:
    """Static share on every core, remaining power split evenly over active cores."""
    p = np.full(spec.core_count, static_power_per_core(spec))
    dyn = max(float(total_power_w) - spec.power_static_w, 0.0)
    p[list(active_cores)] += dyn / len(active_cores)
    return p


def derive_thermal(pred: Mapping[str, float], spec: PlatformSpec, temps: Sequence[float],
                   active_cores: Sequence[int]) -> np.ndarray:
    """Predicted temperatures after a run, from a profiler prediction.

    ``pred`` must provide ``power_w`` (mean power) and ``makespan_s``.
    """
    missing = [k for k in ("power_w", "makespan_s") if k not in pred]
    if missing:
        raise MissingChannels(f"profiler prediction lacks {missing}")
    power = predicted_core_power(spec, pred["power_w"], active_cores)
    n_ticks = max(1, int(round(max(float(pred["makespan_s"]), 0.0) / spec.tick_s)))
    return relax_temperatures(spec, temps, power, n_ticks)
