"""Inter-model agreement on extracted features."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from ..errors import IncompleteTriple
from .extraction import MODEL_IDS, ExtractionRecord
from .taxonomy import FEATURE_KEYS


@dataclass
class AgreementReport:
    n_benchmarks: int
    models: tuple[str, ...]
    pairwise: dict[str, dict[str, float]]  # feature -> "a|b" -> rate
    unanimous: dict[str, float]

    def pair_mean(self, pair: str) -> float:
        return sum(v[pair] for v in self.pairwise.values()) / len(self.pairwise)

    @property
    def overall_unanimous(self) -> float:
        return sum(self.unanimous.values()) / len(self.unanimous)

    def to_dict(self) -> dict:
        pairs = [f"{a}|{b}" for a, b in combinations(self.models, 2)]
        return {"n_benchmarks": self.n_benchmarks, "models": list(self.models),
                "pairwise": self.pairwise, "unanimous": self.unanimous,
                "overall": {"unanimous": self.overall_unanimous,
                            **{p: self.pair_mean(p) for p in pairs}}}


def agreement(records: Iterable[ExtractionRecord], models: Sequence[str] = MODEL_IDS,
              keys: Sequence[str] = FEATURE_KEYS, strict: bool = True) -> AgreementReport:
    """Fraction of benchmarks on which model pairs (and all models) give the same value.

    ``unknown`` is treated as an ordinary value.  Benchmarks missing a model
    raise ``IncompleteTriple`` unless ``strict`` is False, in which case they
    are skipped.
    """
    by_bench: dict[str, dict[str, dict]] = {}
    for r in records:
        if r.features is None or r.model not in models:
            continue
        by_bench.setdefault(r.benchmark, {})[r.model] = r.features.as_dict()
    complete = {}
    for b, per_model in sorted(by_bench.items()):
        if all(m in per_model for m in models):
            complete[b] = per_model
        elif strict:
            missing = [m for m in models if m not in per_model]
            raise IncompleteTriple(f"{b} lacks records from {missing}")
    if not complete:
        raise IncompleteTriple("no benchmark has records from every model")
    n = len(complete)
    pairs = list(combinations(models, 2))
    pairwise: dict[str, dict[str, float]] = {}
    unanimous: dict[str, float] = {}
    for k in keys:
        pairwise[k] = {f"{a}|{b}": sum(v[a][k] == v[b][k] for v in complete.values()) / n for a, b in pairs}
        unanimous[k] = sum(len({v[m][k] for m in models}) == 1 for v in complete.values()) / n
    return AgreementReport(n, tuple(models), pairwise, unanimous)
