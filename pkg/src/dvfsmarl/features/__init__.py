from .agreement import AgreementReport, agreement
from .cost import CostReport, extraction_cost
from .extraction import (MODEL_IDS, PRICE_USD, ExtractionRecord, FeatureCache, call_with_backoff, extract,
                         fixture_cache, fixture_sources)
from .predictor import feature_row, fit_time_predictor
from .prompt import MAX_CHARS, emit_prompt, truncate
from .syntactic import SYNTACTIC_KEYS, SyntacticFeatureVector, count_syntactic
from .taxonomy import (FEATURE_KEYS, SCHEMA, UNKNOWN, SemanticFeatureVector, allowed, decode, encode,
                       parse_response, validate)

__all__ = [
    "AgreementReport", "agreement", "CostReport", "extraction_cost", "MODEL_IDS", "PRICE_USD",
    "ExtractionRecord", "FeatureCache", "call_with_backoff", "extract", "fixture_cache", "fixture_sources",
    "feature_row", "fit_time_predictor", "MAX_CHARS", "emit_prompt", "truncate", "SYNTACTIC_KEYS",
    "SyntacticFeatureVector", "count_syntactic", "FEATURE_KEYS", "SCHEMA", "UNKNOWN",
    "SemanticFeatureVector", "allowed", "decode", "encode", "parse_response", "validate",
]
