import json
import textwrap

import pytest
from hypothesis import given, strategies as st

from dvfsmarl.errors import AllRetriesFailed, CacheMiss, EmptySource, IncompleteTriple, ParseFailure, UnknownCategory
from dvfsmarl.features import (FEATURE_KEYS, MAX_CHARS, MODEL_IDS, SCHEMA, UNKNOWN, ExtractionRecord, FeatureCache,
                               agreement, allowed, call_with_backoff, count_syntactic, decode,
                               emit_prompt, encode, extract, extraction_cost, feature_row, fixture_cache,
                               fixture_sources, parse_response, validate)
from dvfsmarl.features.extraction import data_path

BASE = {k: allowed(k)[0] for k in FEATURE_KEYS}


def vec(**over):
    d = dict(BASE)
    d.update(over)
    return validate(d)


# prompt ---------------------------------------------------------------------

def test_prompt_golden_file():
    src = fixture_sources()["vector_add"]
    golden = data_path("prompt_vector_add.golden.txt").read_text()
    assert emit_prompt("vector_add", src) == golden
    assert emit_prompt("vector_add", src) == emit_prompt("vector_add", src)


def test_prompt_lists_every_key_once():
    p = emit_prompt("x", "int main(){}")
    assert len(FEATURE_KEYS) == 13
    for k in FEATURE_KEYS:
        assert p.count(f'"{k}"') == 1


def test_short_source_not_truncated():
    p = emit_prompt("tiny", "int x = 1;")
    assert "int x = 1;" in p and "truncated" not in p


def test_long_source_truncated_with_marker():
    src = "a" * 20_000
    p = emit_prompt("big", src)
    assert "a" * MAX_CHARS in p and "a" * (MAX_CHARS + 1) not in p
    assert f"truncated at {MAX_CHARS} characters" in p


def test_prompt_rejects_empty():
    with pytest.raises(EmptySource):
        emit_prompt("e", "   \n")
    with pytest.raises(ValueError):
        emit_prompt("", "int x;")


# parsing --------------------------------------------------------------------

def test_parse_plain_json():
    v = parse_response(json.dumps(BASE))
    assert v.as_dict() == BASE


def test_fenced_response_rejected():
    with pytest.raises(ParseFailure):
        parse_response("```json\n" + json.dumps(BASE) + "\n```")


def test_missing_key_is_named():
    d = dict(BASE)
    del d["numa_sensitivity"]
    with pytest.raises(ParseFailure, match="numa_sensitivity"):
        parse_response(json.dumps(d))


def test_out_of_vocabulary_and_extra_keys():
    with pytest.raises(ParseFailure):
        parse_response(json.dumps({**BASE, "spatial_locality": "extreme"}))
    with pytest.raises(ParseFailure, match="bogus"):
        parse_response(json.dumps({**BASE, "bogus": "x"}))
    with pytest.raises(ParseFailure):
        parse_response("[1, 2]")


def test_unknown_sentinels():
    v = validate({**BASE, "spatial_locality": -1, "numa_sensitivity": "unknown"})
    assert v["spatial_locality"] == v["numa_sensitivity"] == UNKNOWN


# encoding -------------------------------------------------------------------

ORDINAL_TABLE = {"high": 2, "medium": 1, "low": 0, "none": 0}


def test_encoding_table_exact():
    for k in FEATURE_KEYS:
        values, codes = SCHEMA[k]
        for i, v in enumerate(values):
            got = encode(vec(**{k: v}))[FEATURE_KEYS.index(k)]
            if set(values) <= set(ORDINAL_TABLE):
                assert got == ORDINAL_TABLE[v], (k, v)
            else:
                assert got == i, (k, v)
        assert encode(vec(**{k: UNKNOWN}))[FEATURE_KEYS.index(k)] == -1


def test_specific_codes():
    idx = FEATURE_KEYS.index
    assert encode(vec(algorithmic_complexity="O(n^3)"))[idx("algorithmic_complexity")] == 3
    assert encode(vec(parallelization_overhead="high"))[idx("parallelization_overhead")] == 2
    assert encode(vec(scalability_bottleneck="load_imbalance"))[idx("scalability_bottleneck")] == 3


def test_false_sharing_none_and_low_collide():
    i = FEATURE_KEYS.index("false_sharing_risk")
    assert encode(vec(false_sharing_risk="none"))[i] == encode(vec(false_sharing_risk="low"))[i] == 0
    assert decode(encode(vec(false_sharing_risk="none")))["false_sharing_risk"] == "low"


@given(st.fixed_dictionaries({k: st.sampled_from((*allowed(k), UNKNOWN)) for k in FEATURE_KEYS}))
def test_encode_decode_round_trip(d):
    v = validate(d)
    back = decode(encode(v))
    assert encode(back) == encode(v)
    if d["false_sharing_risk"] != "none":
        assert back == v


def test_decode_errors():
    with pytest.raises(UnknownCategory):
        decode((0,) * 12)
    with pytest.raises(UnknownCategory):
        decode((9,) + (0,) * 12)


# agreement ------------------------------------------------------------------

def rec(bench, model, **over):
    return ExtractionRecord(bench, model, "", vec(**over), 0.0, 0.0)


def hand_fixture():
    a, b, c = MODEL_IDS
    out = []
    # b0: all agree; b1: c disagrees; b2: all differ; b3: a disagrees
    plan = {"b0": ("arithmetic", "arithmetic", "arithmetic"), "b1": ("memory", "memory", "logic"),
            "b2": ("arithmetic", "memory", "mixed"), "b3": ("logic", "mixed", "mixed")}
    for bench, vals in plan.items():
        for m, v in zip((a, b, c), vals):
            out.append(rec(bench, m, dominant_operation=v))
    return out


def test_agreement_hand_fixture():
    rep = agreement(hand_fixture())
    a, b, c = MODEL_IDS
    dom = rep.pairwise["dominant_operation"]
    assert dom[f"{a}|{b}"] == 2 / 4  # b0, b1
    assert dom[f"{a}|{c}"] == 1 / 4  # b0
    assert dom[f"{b}|{c}"] == 2 / 4  # b0, b3
    assert rep.unanimous["dominant_operation"] == 1 / 4
    # every other key is identical everywhere
    assert rep.unanimous["spatial_locality"] == 1.0
    assert rep.overall_unanimous == pytest.approx((12 + 0.25) / 13)


def test_identical_vectors_agree_fully():
    rep = agreement([rec("x", m) for m in MODEL_IDS])
    assert rep.overall_unanimous == 1.0
    assert all(v == 1.0 for d in rep.pairwise.values() for v in d.values())


def test_unanimous_bounded_by_pairwise_on_fixture_cache():
    rep = agreement(fixture_cache().records())
    for k in FEATURE_KEYS:
        assert rep.unanimous[k] <= min(rep.pairwise[k].values()) + 1e-12


def test_incomplete_triple():
    recs = [rec("x", MODEL_IDS[0]), rec("x", MODEL_IDS[1])]
    with pytest.raises(IncompleteTriple):
        agreement(recs)
    with pytest.raises(IncompleteTriple):
        agreement(recs, strict=False)
    rep = agreement(recs + [rec("y", m) for m in MODEL_IDS], strict=False)
    assert rep.n_benchmarks == 1


# cost -----------------------------------------------------------------------

def test_cost_worked_example():
    r = extraction_cost(42, 0.0015)
    assert r.total_cost_usd == pytest.approx(0.063, abs=1e-12)


def test_projection_savings_factor():
    r = extraction_cost(1000, 0.018)
    assert r.total_cost_usd == pytest.approx(18.0)
    assert r.profiling_cost_usd == 1000 * 8 * 50
    assert round(r.savings_factor) == 22_222


def test_zero_benchmarks():
    r = extraction_cost(0, 0.0015)
    assert r.total_cost_usd == 0.0 and r.savings_factor is None


def test_latency_speedup():
    r = extraction_cost(2, 0.0015, latencies_s=[3.0, 5.0])
    assert r.latency_per_benchmark_s == 4.0 and r.total_latency_s == 8.0
    assert r.speedup_vs_profiling == pytest.approx(8 * 3600 / 4.0)


# syntactic counter ----------------------------------------------------------

def test_empty_source_counts_zero():
    v = count_syntactic("")
    assert all(x == 0 for x in v.as_tuple())


def test_three_parallel_regions_depth_three():
    src = textwrap.dedent("""
        /* #pragma omp parallel in a comment is ignored */
        int f(int n, double *a) {
            #pragma omp parallel for reduction(+: s) private(i, j)
            for (int i = 0; i < n; i++) {
                for (int j = 0; j < n; j++) {
                    for (int k = 0; k < n; k++) {
                        if (k) a[i] += 1;
                    }
                }
            }
            #pragma omp parallel
            {
                #pragma omp single
                {
                    #pragma omp task shared(a)
                    a[0] = 1;
                    #pragma omp taskwait
                }
            }
            #pragma omp parallel sections
            { }
            return 0;
        }
        """)
    v = count_syntactic(src)
    assert v.parallel_regions == 3
    assert v.worksharing_loops == 1
    assert v.max_loop_depth == 3 and v.loop_count == 3 and v.nested_loops == 2
    assert v.task_constructs == 1 and v.taskwait == 1 and v.single_master == 1
    assert v.reduction_vars == 1 and v.private_vars == 2 and v.shared_vars == 1
    assert v.if_count == 1 and v.function_count == 1


def test_fixture_sources_count():
    v = count_syntactic(fixture_sources()["vector_add"])
    assert v.parallel_regions == 1 and v.worksharing_loops == 1 and v.shared_vars == 3
    assert v.function_count == 2 and v.loop_count == 2


# extraction -----------------------------------------------------------------

def test_cached_mode_needs_no_network():
    cache = fixture_cache()
    assert len(cache.benchmarks()) == 6
    r = extract("cached", "", MODEL_IDS[0], "fib_tasks", cache=cache)
    assert r.features is not None and r.cost_usd == 0.0015
    with pytest.raises(CacheMiss):
        extract("cached", "", MODEL_IDS[0], "nope", cache=cache)


def test_backoff_retries_then_succeeds():
    calls, slept = [], []
    good = json.dumps(BASE)

    def flaky(prompt, model):
        calls.append(model)
        if len(calls) < 3:
            raise OSError("timeout")
        return good

    text, v, attempts = call_with_backoff(flaky, "p", "model_a", sleep=slept.append)
    assert attempts == 3 and slept == [1.0, 2.0] and v.as_dict() == BASE


def test_all_retries_fail_and_degrade(tmp_path):
    slept = []

    def broken(prompt, model):
        return "Sure! Here is the JSON you asked for."

    with pytest.raises(AllRetriesFailed):
        call_with_backoff(broken, "p", "model_a", sleep=slept.append)
    assert slept == [1.0, 2.0, 4.0]
    cache = FeatureCache(tmp_path / "c.jsonl")
    src = fixture_sources()["vector_add"]
    r = extract("live", "p", "model_b", "vector_add", cache=cache, transport=broken, source_code=src,
                sleep=lambda s: None)
    assert r.degraded and not r.valid and r.features is None
    assert r.syntactic == count_syntactic(src)
    assert len(cache) == 0
    row = feature_row(r.features, r.syntactic)
    assert row.shape == (30,) and all(row[:13] == -1)


def test_live_success_appends_to_cache(tmp_path):
    cache = FeatureCache(tmp_path / "c.jsonl")
    r = extract("live", "p", "model_c", "b", cache=cache, transport=lambda p, m: json.dumps(BASE))
    assert r.valid and r.cost_usd == 0.0075
    again = FeatureCache(tmp_path / "c.jsonl")
    assert again.get("b", "model_c").features == r.features


def test_extract_rejects_bad_mode_and_model():
    with pytest.raises(ValueError):
        extract("offline", "", MODEL_IDS[0], "x")
    with pytest.raises(ValueError):
        extract("cached", "", "gpt", "x")
