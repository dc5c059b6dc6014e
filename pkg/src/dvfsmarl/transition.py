from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    """One (s, a, r, s', done) record.

    ``action`` is the agent's flat index; ``action_vec`` is a dense encoding
    of the same action used as environment-model input.
    """

    state: tuple[float, ...]
    action: int
    reward: float
    next_state: tuple[float, ...]
    done: bool = False
    action_vec: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "state", tuple(float(v) for v in self.state))
        object.__setattr__(self, "next_state", tuple(float(v) for v in self.next_state))
        if self.action_vec is not None:
            object.__setattr__(self, "action_vec", tuple(float(v) for v in self.action_vec))

    def to_dict(self) -> dict:
        return {
            "state": list(self.state),
            "action": int(self.action),
            "reward": float(self.reward),
            "next_state": list(self.next_state),
            "done": bool(self.done),
            "action_vec": None if self.action_vec is None else list(self.action_vec),
        }


def stack(transitions) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    s = np.array([t.state for t in transitions], dtype=float)
    a = np.array([t.action for t in transitions], dtype=int)
    r = np.array([t.reward for t in transitions], dtype=float)
    s2 = np.array([t.next_state for t in transitions], dtype=float)
    d = np.array([t.done for t in transitions], dtype=bool)
    return s, a, r, s2, d
