"""Dueling double DQN agents with replay memory and epsilon-greedy exploration.

The network is one shared ReLU layer of ``n_hidden`` units feeding a value
head (one output) and an advantage head (``n_actions`` outputs), combined as
``Q = V + A - mean(A)``.  An identically shaped target copy evaluates the
bootstrap action chosen by the online copy.
"""

from __future__ import annotations

import copy as _copy
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .env_model import CHECKPOINT_FORMAT, CHECKPOINT_VERSION
from .errors import DimensionMismatch, EmptyBatch
from .transition import Transition, stack

AGENT_KINDS = ("profiler", "temperature", "generic")
_ORDER = ["w1", "b1", "wv", "bv", "wa", "ba"]


@dataclass(frozen=True)
class AgentConfig:
    n_state: int
    n_hidden: int
    n_actions: int
    learning_rate: float = 0.001
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_horizon: int = 100
    buffer_capacity: int = 10000
    batch_size: int = 32
    target_update_every: int = 100
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if min(self.n_state, self.n_hidden, self.n_actions, self.buffer_capacity,
               self.batch_size, self.target_update_every, self.epsilon_horizon) < 1:
            raise ValueError("dimensions and schedule lengths must be >= 1")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not (0 <= self.epsilon_end <= self.epsilon_start <= 1):
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.batch_size > self.buffer_capacity:
            raise ValueError("batch_size exceeds buffer_capacity")

    def replace(self, **kw) -> "AgentConfig":
        return replace(self, **kw)


def dueling_param_count(n_state: int, n_hidden: int, n_actions: int) -> int:
    """Online + target scalars for one agent."""
    one = (n_state * n_hidden + n_hidden) + (n_hidden * n_actions + n_actions) + (n_hidden + 1)
    return 2 * one


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with seeded sampling."""

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0
        self._rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self._items)

    def add(self, t: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._cursor] = t
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, k: int) -> list[Transition]:
        k = min(k, len(self._items))
        idx = self._rng.choice(len(self._items), size=k, replace=False)
        return [self._items[i] for i in idx]

    def items(self) -> list[Transition]:
        """Oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._cursor:] + self._items[:self._cursor]


class DuelingNet:
    def __init__(self, n_state: int, n_hidden: int, n_actions: int, rng: np.random.Generator):
        w1, b1 = nn.init_dense(rng, n_state, n_hidden)
        wv, bv = nn.init_dense(rng, n_hidden, 1)
        wa, ba = nn.init_dense(rng, n_hidden, n_actions)
        self.params: nn.Params = {"w1": w1, "b1": b1, "wv": wv, "bv": bv, "wa": wa, "ba": ba}

    @property
    def n_state(self) -> int:
        return self.params["w1"].shape[0]

    @property
    def n_actions(self) -> int:
        return self.params["wa"].shape[1]

    def heads(self, s: np.ndarray):
        s = np.atleast_2d(np.asarray(s, dtype=float))
        if s.shape[1] != self.n_state:
            raise DimensionMismatch(f"state has {s.shape[1]} dims, net expects {self.n_state}")
        pre = s @ self.params["w1"] + self.params["b1"]
        h = nn.relu(pre)
        v = h @ self.params["wv"] + self.params["bv"]
        a = h @ self.params["wa"] + self.params["ba"]
        return s, pre, h, v, a

    def q(self, s) -> np.ndarray:
        _, _, _, v, a = self.heads(s)
        return v + a - a.mean(axis=1, keepdims=True)

    def loss_and_grad(self, s, actions, targets) -> tuple[float, nn.Params]:
        s, pre, h, v, a = self.heads(s)
        q = v + a - a.mean(axis=1, keepdims=True)
        rows = np.arange(len(s))
        diff = q[rows, actions] - targets
        loss = float(np.mean(diff ** 2))
        g = 2.0 * diff / len(s)
        na = self.n_actions
        d_a = -np.repeat(g[:, None] / na, na, axis=1)
        d_a[rows, actions] += g
        d_v = g[:, None]
        p = self.params
        grads = {"wv": h.T @ d_v, "bv": d_v.sum(axis=0), "wa": h.T @ d_a, "ba": d_a.sum(axis=0)}
        d_h = (d_v @ p["wv"].T + d_a @ p["wa"].T) * (pre > 0)
        grads["w1"] = s.T @ d_h
        grads["b1"] = d_h.sum(axis=0)
        return loss, grads


def q_values(net: DuelingNet, state) -> np.ndarray:
    return net.q(state)[0]


class D3QNAgent:
    def __init__(self, config: AgentConfig, kind: str = "generic"):
        if kind not in AGENT_KINDS:
            raise ValueError(f"agent kind must be one of {AGENT_KINDS}")
        self.config = config
        self.kind = kind
        self.online = DuelingNet(config.n_state, config.n_hidden, config.n_actions,
                                 np.random.default_rng([config.seed, 1]))
        self.target = DuelingNet(config.n_state, config.n_hidden, config.n_actions,
                                 np.random.default_rng([config.seed, 2]))
        self.optimizer = nn.make_optimizer(config.optimizer, config.learning_rate)
        self.rng = np.random.default_rng([config.seed, 3])
        self.learn_steps = 0
        self.sync_count = 0

    @property
    def n_params(self) -> int:
        return nn.count(self.online.params) + nn.count(self.target.params)

    def epsilon(self, episode: int) -> float:
        """Exponential decay from epsilon_start reaching epsilon_end at epsilon_horizon episodes."""
        c = self.config
        if c.epsilon_start == 0 or episode >= c.epsilon_horizon:
            return c.epsilon_end
        if c.epsilon_end == 0:
            ratio = 1e-6 / c.epsilon_start
        else:
            ratio = c.epsilon_end / c.epsilon_start
        return max(c.epsilon_end, c.epsilon_start * ratio ** (episode / c.epsilon_horizon))

    def q_values(self, state) -> np.ndarray:
        return q_values(self.online, state)

    def select_action(self, state, epsilon: float) -> int:
        if not 0 <= epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if epsilon > 0 and self.rng.random() < epsilon:
            return int(self.rng.integers(self.config.n_actions))
        return int(np.argmax(self.q_values(state)))  # argmax picks the lowest index on ties

    def targets(self, batch: Sequence[Transition]) -> np.ndarray:
        _, _, r, s2, done = stack(batch)
        best = np.argmax(self.online.q(s2), axis=1)
        boot = self.target.q(s2)[np.arange(len(batch)), best]
        return r + self.config.gamma * np.where(done, 0.0, boot)

    def learn_step(self, batch: Sequence[Transition]) -> float:
        if len(batch) == 0:
            raise EmptyBatch("cannot learn from an empty batch")
        s, a, _, _, _ = stack(batch)
        y = self.targets(batch)
        loss, grads = self.online.loss_and_grad(s, a, y)
        self.optimizer.step(self.online.params, grads)
        self.learn_steps += 1
        if self.learn_steps % self.config.target_update_every == 0:
            self.sync_target()
        return loss

    def sync_target(self) -> None:
        self.target.params = {k: v.copy() for k, v in self.online.params.items()}
        self.sync_count += 1

    def snapshot(self) -> "D3QNAgent":
        return _copy.deepcopy(self)

    # Serialisation ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": "agent",
            "agent_kind": self.kind,
            "config": asdict(self.config),
            "online": nn.flatten(self.online.params, _ORDER).tolist(),
            "target": nn.flatten(self.target.params, _ORDER).tolist(),
            "learn_steps": self.learn_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "D3QNAgent":
        if d.get("format") != CHECKPOINT_FORMAT or d.get("kind") != "agent":
            raise ValueError("not an agent checkpoint")
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')}")
        agent = cls(AgentConfig(**d["config"]), d["agent_kind"])
        shapes = {k: v.shape for k, v in agent.online.params.items()}
        agent.online.params = nn.unflatten(np.asarray(d["online"]), shapes, _ORDER)
        agent.target.params = nn.unflatten(np.asarray(d["target"]), shapes, _ORDER)
        agent.learn_steps = int(d["learn_steps"])
        return agent

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "D3QNAgent":
        return cls.from_dict(json.loads(Path(path).read_text()))
