"""Tiny numpy building blocks: seeded dense init, ReLU, SGD/Adam, flat parameter I/O."""

from __future__ import annotations

import numpy as np

Params = dict[str, np.ndarray]


def init_dense(rng: np.random.Generator, fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=fan_out)
    return w, b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def count(params: Params) -> int:
    return int(sum(p.size for p in params.values()))


def flatten(params: Params, order: list[str]) -> np.ndarray:
    return np.concatenate([params[k].ravel() for k in order])


def unflatten(flat: np.ndarray, shapes: dict[str, tuple[int, ...]], order: list[str]) -> Params:
    out: Params = {}
    i = 0
    for k in order:
        size = int(np.prod(shapes[k]))
        out[k] = np.asarray(flat[i:i + size], dtype=float).reshape(shapes[k]).copy()
        i += size
    if i != len(flat):
        raise ValueError(f"flat vector has {len(flat)} entries, expected {i}")
    return out


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: Params, grads: Params) -> None:
        for k, g in grads.items():
            params[k] -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: Params = {}
        self.v: Params = {}

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            mhat = self.m[k] / (1 - b1 ** self.t)
            vhat = self.v[k] / (1 - b2 ** self.t)
            params[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


OPTIMIZERS = ("sgd", "adam")


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}")
