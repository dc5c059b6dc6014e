from .config import RunConfig, load_config
from .latency import LatencyComparison, LatencyLedger, ProfileParams, latency_report
from .runner import compare, rank_outcomes, run, run_cell, summarize, verify

__all__ = ["RunConfig", "load_config", "LatencyComparison", "LatencyLedger", "ProfileParams",
           "latency_report", "compare", "rank_outcomes", "run", "run_cell", "summarize", "verify"]
