"""Execution-time regression from code features, reusing the dynamics-model FCN."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..env_model import DynamicsModel, RegressorConfig
from .syntactic import SyntacticFeatureVector
from .taxonomy import SemanticFeatureVector, encode


def feature_row(semantic: SemanticFeatureVector | None, syntactic: SyntacticFeatureVector | None,
                platform: Sequence[float] = ()) -> np.ndarray:
    """13 encoded semantic codes + 17 syntactic counts + optional normalized platform/config channels.

    A missing semantic vector (degraded extraction) contributes 13 unknowns.
    """
    sem = encode(semantic) if semantic is not None else (-1,) * 13
    syn = syntactic.as_tuple() if syntactic is not None else (0,) * 17
    return np.array([*sem, *syn, *platform], dtype=float)


def fit_time_predictor(rows: np.ndarray, seconds: Sequence[float], n_hidden: int = 32, epochs: int = 300,
                       learning_rate: float = 0.05, seed: int = 0) -> DynamicsModel:
    """Regress log execution time on feature rows; predict with ``np.exp(model.predict_batch(x))``."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    y = np.log(np.asarray(seconds, dtype=float)).reshape(-1, 1)
    model = DynamicsModel(RegressorConfig(rows.shape[1], n_hidden, 1, learning_rate=learning_rate,
                                          epochs=epochs, seed=seed))
    return model.fit(rows, y)
