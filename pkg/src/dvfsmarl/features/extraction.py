"""Cached and live feature extraction.

The cache is a JSON-lines file, one whole record per line.  Live mode calls a
user-supplied transport (or an HTTP endpoint configured through
``DVFSMARL_LLM_ENDPOINT`` / ``DVFSMARL_LLM_API_KEY``), retries with
exponential backoff and, when every attempt fails, degrades to a record that
carries only the syntactic counters.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from ..errors import AllRetriesFailed, CacheMiss, ParseFailure
from .syntactic import SyntacticFeatureVector, count_syntactic
from .taxonomy import SemanticFeatureVector, parse_response, validate

MODEL_IDS = ("model_a", "model_b", "model_c")
RETRY_DELAYS_S = (1.0, 2.0, 4.0)
# per-benchmark price of one extraction with each model (USD)
PRICE_USD = {"model_a": 0.0015, "model_b": 0.009, "model_c": 0.0075}

Transport = Callable[[str, str], str]


@dataclass(frozen=True)
class ExtractionRecord:
    benchmark: str
    model: str
    raw_response: str
    features: SemanticFeatureVector | None
    latency_ms: float
    cost_usd: float
    timestamp: str = ""
    valid: bool = True
    degraded: bool = False
    syntactic: SyntacticFeatureVector | None = None
    error: str | None = None

    def to_cache_line(self) -> str:
        if self.features is None:
            raise ValueError("only records with parsed features are cached")
        return json.dumps({
            "benchmark": self.benchmark, "model": self.model, "features": self.features.as_dict(),
            "latency_ms": self.latency_ms, "cost_usd": self.cost_usd, "timestamp": self.timestamp,
        }, sort_keys=True)

    @classmethod
    def from_cache_obj(cls, obj: dict) -> "ExtractionRecord":
        feats = validate(obj["features"])
        return cls(obj["benchmark"], obj["model"], json.dumps(obj["features"], sort_keys=True), feats,
                   float(obj["latency_ms"]), float(obj["cost_usd"]), str(obj.get("timestamp", "")))


class FeatureCache:
    """Append-only JSON-lines store keyed by (benchmark, model); later lines win."""

    def __init__(self, path):
        self.path = Path(path)
        self._records: dict[tuple[str, str], ExtractionRecord] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    rec = ExtractionRecord.from_cache_obj(json.loads(line))
                    self._records[(rec.benchmark, rec.model)] = rec

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key) -> bool:
        return key in self._records

    def get(self, benchmark: str, model: str) -> ExtractionRecord:
        try:
            return self._records[(benchmark, model)]
        except KeyError:
            raise CacheMiss(f"no cached record for ({benchmark}, {model})") from None

    def records(self) -> list[ExtractionRecord]:
        return [self._records[k] for k in sorted(self._records)]

    def benchmarks(self) -> list[str]:
        return sorted({b for b, _ in self._records})

    def append(self, rec: ExtractionRecord) -> None:
        line = rec.to_cache_line() + "\n"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a") as fh:
            fh.write(line)
            fh.flush()
        self._records[(rec.benchmark, rec.model)] = rec


def http_transport_from_env() -> Transport:
    """POST ``{"model", "prompt"}`` to the configured endpoint; expects ``{"text": ...}`` back."""
    import urllib.request

    endpoint = os.environ.get("DVFSMARL_LLM_ENDPOINT")
    if not endpoint:
        raise RuntimeError("live mode needs DVFSMARL_LLM_ENDPOINT")
    key = os.environ.get("DVFSMARL_LLM_API_KEY", "")

    def send(prompt: str, model: str) -> str:
        body = json.dumps({"model": model, "prompt": prompt}).encode()
        req = urllib.request.Request(endpoint, body, {"Content-Type": "application/json",
                                                      "Authorization": f"Bearer {key}"})
        with urllib.request.urlopen(req, timeout=60) as resp:
            return json.loads(resp.read())["text"]

    return send


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def call_with_backoff(transport: Transport, prompt: str, model: str,
                      delays: Iterable[float] = RETRY_DELAYS_S,
                      sleep: Callable[[float], None] = time.sleep) -> tuple[str, SemanticFeatureVector, int]:
    """One initial attempt plus one retry per delay; transport errors and unparsable replies both retry."""
    errors = []
    schedule = [0.0, *delays]
    for attempt, delay in enumerate(schedule):
        if delay:
            sleep(delay)
        try:
            text = transport(prompt, model)
            return text, parse_response(text), attempt + 1
        except (ParseFailure, OSError, RuntimeError, ValueError) as exc:
            errors.append(f"attempt {attempt + 1}: {exc}")
    raise AllRetriesFailed("; ".join(errors))


def extract(mode: str, prompt: str, model: str, benchmark: str, cache: FeatureCache | None = None,
            transport: Transport | None = None, source_code: str | None = None,
            delays: Iterable[float] = RETRY_DELAYS_S, sleep: Callable[[float], None] = time.sleep,
            clock: Callable[[], float] = time.perf_counter) -> ExtractionRecord:
    if model not in MODEL_IDS:
        raise ValueError(f"model must be one of {MODEL_IDS}")
    if mode == "cached":
        if cache is None:
            raise CacheMiss("cached mode needs a feature cache")
        return cache.get(benchmark, model)
    if mode != "live":
        raise ValueError("mode must be 'cached' or 'live'")
    send = transport or http_transport_from_env()
    t0 = clock()
    try:
        text, feats, _ = call_with_backoff(send, prompt, model, delays, sleep)
    except AllRetriesFailed as exc:
        synt = count_syntactic(source_code) if source_code is not None else SyntacticFeatureVector()
        return ExtractionRecord(benchmark, model, "", None, (clock() - t0) * 1000.0, 0.0, _now(),
                                valid=False, degraded=True, syntactic=synt, error=str(exc))
    rec = ExtractionRecord(benchmark, model, text, feats, (clock() - t0) * 1000.0, PRICE_USD[model], _now(),
                           syntactic=count_syntactic(source_code) if source_code is not None else None)
    if cache is not None:
        cache.append(rec)
    return rec


def data_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name


def fixture_cache() -> FeatureCache:
    return FeatureCache(data_path("feature_cache.jsonl"))


def fixture_sources() -> dict[str, str]:
    return {p.stem: p.read_text() for p in sorted(data_path("").glob("*.c"))}
