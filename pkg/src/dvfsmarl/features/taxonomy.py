"""The 13-key semantic feature schema, its integer encoding and strict response parsing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from ..errors import ParseFailure, UnknownCategory

UNKNOWN = "unknown"
UNKNOWN_CODE = -1

_ORDINAL = {"low": 0, "none": 0, "medium": 1, "high": 2}

# key -> (allowed values in listed order, value -> code)
SCHEMA: dict[str, tuple[tuple[str, ...], dict[str, int]]] = {}


def _nominal(*values: str) -> tuple[tuple[str, ...], dict[str, int]]:
    return values, {v: i for i, v in enumerate(values)}


def _ordinal(*values: str) -> tuple[tuple[str, ...], dict[str, int]]:
    return values, {v: _ORDINAL[v] for v in values}


SCHEMA.update({
    "memory_access_pattern": _nominal("unit_stride", "non_unit_stride", "random", "mixed"),
    "spatial_locality": _ordinal("high", "medium", "low"),
    "temporal_locality": _ordinal("high", "medium", "low"),
    "cache_behavior_pattern": _nominal("streaming", "random", "blocked", "mixed"),
    "numa_sensitivity": _ordinal("high", "medium", "low"),
    "algorithmic_complexity": _nominal("O(n)", "O(n log n)", "O(n^2)", "O(n^3)", "other"),
    "dominant_operation": _nominal("arithmetic", "memory", "logic", "mixed"),
    "vectorization_potential": _ordinal("high", "medium", "low"),
    "data_dependency_type": _nominal("none", "loop_carried", "cross_iteration", "complex"),
    "false_sharing_risk": _ordinal("high", "medium", "low", "none"),
    "load_balance_characteristic": _nominal("uniform", "irregular", "dynamic"),
    "parallelization_overhead": _ordinal("low", "medium", "high"),
    "scalability_bottleneck": _nominal("none", "memory_bandwidth", "synchronization", "load_imbalance"),
})

FEATURE_KEYS: tuple[str, ...] = tuple(SCHEMA)
ORDINAL_KEYS = tuple(k for k, (vals, _) in SCHEMA.items() if set(vals) <= set(_ORDINAL))


def allowed(key: str) -> tuple[str, ...]:
    return SCHEMA[key][0]


@dataclass(frozen=True)
class SemanticFeatureVector:
    values: tuple[tuple[str, str], ...]

    @classmethod
    def from_mapping(cls, d: Mapping[str, object]) -> "SemanticFeatureVector":
        return cls(tuple((k, _canonical(k, d[k])) for k in FEATURE_KEYS))

    def as_dict(self) -> dict[str, str]:
        return dict(self.values)

    def __getitem__(self, key: str) -> str:
        return self.as_dict()[key]


def _canonical(key: str, value: object) -> str:
    if value == UNKNOWN_CODE or value == str(UNKNOWN_CODE) or value == UNKNOWN:
        return UNKNOWN
    if not isinstance(value, str) or value not in SCHEMA[key][1]:
        raise UnknownCategory(f"{key}: {value!r} not in {SCHEMA[key][0]}")
    return value


def validate(d: Mapping[str, object]) -> SemanticFeatureVector:
    """Exactly the 13 keys, each an allowed value or the unknown sentinel."""
    missing = [k for k in FEATURE_KEYS if k not in d]
    extra = sorted(k for k in d if k not in SCHEMA)
    if missing:
        raise ParseFailure(f"missing keys: {', '.join(missing)}")
    if extra:
        raise ParseFailure(f"unexpected keys: {', '.join(extra)}")
    return SemanticFeatureVector.from_mapping(d)


def encode(vec: SemanticFeatureVector | Mapping[str, object]) -> tuple[int, ...]:
    d = vec.as_dict() if isinstance(vec, SemanticFeatureVector) else validate(vec).as_dict()
    out = []
    for k in FEATURE_KEYS:
        v = d[k]
        out.append(UNKNOWN_CODE if v == UNKNOWN else SCHEMA[k][1][v])
    return tuple(out)


def decode(codes) -> SemanticFeatureVector:
    """Inverse of :func:`encode`.

    ``false_sharing_risk`` maps both ``low`` and ``none`` to 0, so code 0 decodes to ``low``.
    """
    codes = list(codes)
    if len(codes) != len(FEATURE_KEYS):
        raise UnknownCategory(f"expected {len(FEATURE_KEYS)} codes, got {len(codes)}")
    d = {}
    for k, c in zip(FEATURE_KEYS, codes):
        if c == UNKNOWN_CODE:
            d[k] = UNKNOWN
            continue
        matches = [v for v in SCHEMA[k][0] if SCHEMA[k][1][v] == c]
        if not matches:
            raise UnknownCategory(f"{k}: code {c} has no category")
        d[k] = matches[0]
    return SemanticFeatureVector.from_mapping(d)


def parse_response(text: str) -> SemanticFeatureVector:
    """Strict parse: the whole response must be one JSON object, no fences or prose."""
    stripped = text.strip()
    if stripped.startswith("```") or "```" in stripped:
        raise ParseFailure("response contains a code fence")
    try:
        obj = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseFailure("response is not a JSON object")
    try:
        return validate(obj)
    except UnknownCategory as exc:
        raise ParseFailure(str(exc)) from None
