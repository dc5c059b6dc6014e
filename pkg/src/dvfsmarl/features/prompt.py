"""Zero-shot extraction prompt."""

from __future__ import annotations

from ..errors import EmptySource
from .taxonomy import FEATURE_KEYS, allowed

MAX_CHARS = 15000
TRUNCATION_MARKER = "\n/* ... [source truncated at {n} characters] ... */"

_HEADER = """Analyze this OpenMP C program ({benchmark_name}) and extract ONLY the following features as valid JSON.

CRITICAL INSTRUCTIONS:
- Your ENTIRE response must be ONLY a valid JSON object
- DO NOT include any explanations, markdown, or text outside the JSON
- DO NOT use backticks or code blocks
- If a feature cannot be determined, use -1 or "unknown"

Code:
{source_code}

Extract these features in JSON format with EXACTLY these keys:
"""

_FOOTER = "\nRESPOND WITH ONLY THE JSON OBJECT, NOTHING ELSE."


def truncate(source: str, max_chars: int = MAX_CHARS) -> str:
    if len(source) <= max_chars:
        return source
    return source[:max_chars] + TRUNCATION_MARKER.format(n=max_chars)


def _key_lines() -> str:
    return "\n".join(f'  "{k}": {" | ".join(allowed(k))}' for k in FEATURE_KEYS)


def emit_prompt(benchmark_name: str, source_code: str, max_chars: int = MAX_CHARS) -> str:
    if not benchmark_name:
        raise ValueError("benchmark name must be nonempty")
    if not source_code.strip():
        raise EmptySource(f"{benchmark_name}: empty source")
    body = _HEADER.format(benchmark_name=benchmark_name, source_code=truncate(source_code, max_chars))
    return body + "{\n" + _key_lines() + "\n}\n" + _FOOTER
