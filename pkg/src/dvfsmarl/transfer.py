"""Cross-platform normalisation, accuracy metrics and the n-shot transfer harness."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (DegenerateRange, InsufficientTargetData, LengthMismatch,
                     ZeroActual)


@dataclass
class MinMaxScaler:
    """Column-wise min-max scaling to [0, 1]; constant columns pass through shifted."""

    lo: np.ndarray | None = None
    span: np.ndarray | None = None

    def fit(self, x: np.ndarray) -> "MinMaxScaler":
        x = np.asarray(x, dtype=float)
        self.lo = x.min(axis=0)
        span = x.max(axis=0) - self.lo
        self.span = np.where(span > 0, span, 1.0)
        return self

    @property
    def fitted(self) -> bool:
        return self.lo is not None

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / self.span

    def inverse(self, z):
        return np.asarray(z, dtype=float) * self.span + self.lo

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "span": self.span.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MinMaxScaler":
        return cls(np.asarray(d["lo"], dtype=float), np.asarray(d["span"], dtype=float))


@dataclass(frozen=True)
class PlatformNormalizer:
    f_min: float
    f_max: float
    t_ambient: float
    t_throttle: float
    p_tdp: float
    core_total: int

    def __post_init__(self):
        if self.f_max == self.f_min:
            raise DegenerateRange("f_max equals f_min")
        if self.f_max < self.f_min:
            raise ValueError("f_max must exceed f_min")
        if self.t_throttle <= self.t_ambient:
            raise DegenerateRange("t_throttle must exceed t_ambient")
        if self.p_tdp <= 0:
            raise ValueError("p_tdp must be positive")
        if self.core_total < 1:
            raise ValueError("core_total must be >= 1")

    @classmethod
    def from_spec(cls, spec) -> "PlatformNormalizer":
        return cls(spec.f_min, spec.f_max, spec.thermal_ambient, spec.throttle_temp,
                   spec.tdp_w, spec.core_count)

    # Individual channels ------------------------------------------------
    def freq(self, f_hz):
        return (_clamp(f_hz, self.f_min, self.f_max, "frequency") - self.f_min) / (self.f_max - self.f_min)

    def freq_inv(self, u):
        return np.asarray(u, dtype=float) * (self.f_max - self.f_min) + self.f_min

    def temp(self, t_c):
        """Thermal headroom: 1 at ambient, 0 at the throttle point."""
        t = _clamp(t_c, self.t_ambient, self.t_throttle, "temperature")
        return (self.t_throttle - t) / (self.t_throttle - self.t_ambient)

    def temp_inv(self, u):
        return self.t_throttle - np.asarray(u, dtype=float) * (self.t_throttle - self.t_ambient)

    def power(self, p_w):
        return _clamp(p_w, 0.0, self.p_tdp, "power") / self.p_tdp

    def power_inv(self, u):
        return np.asarray(u, dtype=float) * self.p_tdp

    def cores(self, c):
        return _clamp(c, 1, self.core_total, "core count") / self.core_total

    def cores_inv(self, u):
        return np.asarray(u, dtype=float) * self.core_total

    # Whole observation ------------------------------------------------------
    def normalize(self, raw: Mapping[str, object]) -> dict:
        fns = {"freq_hz": self.freq, "temp_c": self.temp, "power_w": self.power, "cores": self.cores}
        return {k: _scalar(fns[k](v)) for k, v in raw.items()}

    def denormalize(self, unit: Mapping[str, object]) -> dict:
        fns = {"freq_hz": self.freq_inv, "temp_c": self.temp_inv, "power_w": self.power_inv,
               "cores": self.cores_inv}
        return {k: _scalar(fns[k](v)) for k, v in unit.items()}


def _scalar(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _clamp(x, lo, hi, what):
    x = np.asarray(x, dtype=float)
    if np.any(x < lo) or np.any(x > hi):
        warnings.warn(f"{what} outside [{lo}, {hi}]; clamped", RuntimeWarning, stacklevel=3)
        x = np.clip(x, lo, hi)
    return x


# Metrics --------------------------------------------------------------------

def _check_pair(pred, actual):
    p = np.asarray(pred, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if p.shape != a.shape:
        raise LengthMismatch(f"{p.size} predictions vs {a.size} actuals")
    if p.size == 0:
        raise LengthMismatch("empty inputs")
    return p, a


def mape(pred, actual) -> float:
    p, a = _check_pair(pred, actual)
    if np.any(a == 0):
        raise ZeroActual("MAPE undefined with zero actual values")
    return float(np.mean(np.abs(p - a) / np.abs(a)) * 100.0)


def r2(pred, actual) -> float:
    p, a = _check_pair(pred, actual)
    ss_res = float(np.sum((a - p) ** 2))
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else float("-inf")
    return 1.0 - ss_res / ss_tot


def spearman(pred, actual) -> float:
    p, a = _check_pair(pred, actual)
    rp, ra = rankdata(p), rankdata(a)
    rp -= rp.mean()
    ra -= ra.mean()
    denom = np.sqrt(np.sum(rp ** 2) * np.sum(ra ** 2))
    if denom == 0:
        return float("nan")
    return float(np.sum(rp * ra) / denom)


def metrics(pred, actual) -> dict:
    return {"mape": mape(pred, actual), "r2": r2(pred, actual), "spearman": spearman(pred, actual)}


# N-shot transfer ------------------------------------------------------------

@dataclass(frozen=True)
class TransferReport:
    shots: int
    mape: float
    r2: float
    spearman_rho: float

    def to_dict(self) -> dict:
        return {"shots": self.shots, "mape": self.mape, "r2": self.r2, "spearman_rho": self.spearman_rho}


@dataclass
class TransferDataset:
    """Makespan-prediction samples from one platform, already platform-normalised.

    ``x`` columns: core ratio, normalised frequency, mean thermal headroom.
    ``y`` is makespan normalised to the platform's [performance, powersave]
    makespan range; ``t_lo``/``t_hi`` denormalise it back to seconds.
    """

    x: np.ndarray
    y: np.ndarray
    freq_index: np.ndarray
    makespan_s: np.ndarray
    t_lo: float
    t_hi: float
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "TransferDataset":
        idx = np.asarray(idx, dtype=int)
        return TransferDataset(self.x[idx], self.y[idx], self.freq_index[idx], self.makespan_s[idx],
                               self.t_lo, self.t_hi, self.meta)

    def seconds(self, y_norm) -> np.ndarray:
        return np.asarray(y_norm, dtype=float) * (self.t_hi - self.t_lo) + self.t_lo


def collect_transfer_data(spec, workload, n_samples: int, seed: int) -> TransferDataset:
    """Random (cores, freq, warm-up) probes on ``spec``; normalised per the platform."""
    from .actions import identity_action
    from .platform_sim import execute, idle, initial_state

    norm = PlatformNormalizer.from_spec(spec)
    rng = np.random.default_rng(seed)
    base = initial_state(spec)
    t_lo = execute(spec, workload, identity_action(spec.m, spec.m, spec.n - 1), base, seed).makespan_s
    t_hi = execute(spec, workload, identity_action(spec.m, spec.m, 0), base, seed + 1).makespan_s
    xs, ys, fidx, secs = [], [], [], []
    for i in range(n_samples):
        cores = int(rng.integers(1, spec.m + 1))
        f = int(rng.integers(0, spec.n))
        warm = float(rng.uniform(0.0, 1.0))
        state = base
        if warm > 0.05:
            # pre-heat by running the workload flat out, so thermal headroom varies across samples
            state = execute(spec, workload, identity_action(spec.m, spec.m, spec.n - 1), base,
                            int(rng.integers(2**31 - 1))).end_state
            state = idle(spec, state, spec.thermal_time_constant * (1.0 - warm))
        out = execute(spec, workload, identity_action(spec.m, cores, f), state, int(rng.integers(2**31 - 1)))
        headroom = float(np.mean(norm.temp(np.minimum(state.temps_c, spec.throttle_temp))))
        xs.append((cores / spec.m, float(norm.freq(spec.freq_table[f])), headroom))
        ys.append((out.makespan_s - t_lo) / (t_hi - t_lo))
        fidx.append(f)
        secs.append(out.makespan_s)
    return TransferDataset(np.array(xs), np.array(ys), np.array(fidx), np.array(secs), t_lo, t_hi,
                           {"platform": spec.name})


def stratified_split(freq_index, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Hold out ``test_fraction`` of each frequency index's samples."""
    rng = np.random.default_rng(seed)
    freq_index = np.asarray(freq_index)
    train, test = [], []
    for f in np.unique(freq_index):
        idx = np.flatnonzero(freq_index == f)
        rng.shuffle(idx)
        k = int(round(test_fraction * len(idx)))
        test.extend(idx[:k])
        train.extend(idx[k:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


def train_source_model(data: TransferDataset, seed: int = 0, epochs: int = 300,
                       n_hidden: int = 32, learning_rate: float = 0.05):
    from .env_model import DynamicsModel, RegressorConfig

    cfg = RegressorConfig(n_input=data.x.shape[1], n_hidden=n_hidden, n_output=1,
                          learning_rate=learning_rate, epochs=epochs, seed=seed)
    model = DynamicsModel(cfg)
    # platform normalisation already maps inputs/outputs to unit ranges
    return model.fit(data.x, data.y[:, None], refit_scalers=True, identity_scalers=True)


def evaluate_model(model, data: TransferDataset, shots: int) -> TransferReport:
    pred = data.seconds(model.predict_batch(data.x)[:, 0])
    m = metrics(pred, data.makespan_s)
    return TransferReport(shots, m["mape"], m["r2"], m["spearman"])


def nshot_transfer(source_model, target_data: TransferDataset,
                   shots: Sequence[int] = (0, 10, 20, 50), seed: int = 0,
                   test_fraction: float = 0.2, finetune_epochs: int = 60,
                   finetune_lr: float = 0.02) -> list[TransferReport]:
    """Zero-shot evaluation, then fine-tune on ``n`` target samples for each n in ``shots``.

    Every entry of ``shots`` is evaluated on the same stratified held-out set.
    """
    train_idx, test_idx = stratified_split(target_data.freq_index, test_fraction, seed)
    if len(test_idx) == 0:
        raise InsufficientTargetData("no held-out target samples")
    need = max(shots) if shots else 0
    if need > len(train_idx):
        raise InsufficientTargetData(f"{need} shots requested but only {len(train_idx)} training samples")
    test = target_data.subset(test_idx)
    pool = np.random.default_rng(seed).permutation(train_idx)
    reports = []
    for n in shots:
        if n == 0:
            reports.append(evaluate_model(source_model, test, 0))
            continue
        tuned = source_model.copy()
        tuned.config = tuned.config.replace(learning_rate=finetune_lr, epochs=finetune_epochs,
                                            batch_size=min(n, tuned.config.batch_size), seed=seed)
        fit_set = target_data.subset(pool[:n])
        tuned.fit(fit_set.x, fit_set.y[:, None], refit_scalers=False)
        reports.append(evaluate_model(tuned, test, n))
    return reports
