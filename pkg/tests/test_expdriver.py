import json

import numpy as np
import pytest

from dvfsmarl.errors import ConfigInvalid
from dvfsmarl.expdriver.cli import main
from dvfsmarl.expdriver.config import load_config
from dvfsmarl.expdriver.latency import LatencyLedger, ProfileParams, latency_report, time_calls
from dvfsmarl.expdriver.runner import rank_outcomes, run, summarize, verify

SMALL = {"run_id": "t", "policy": "ondemand", "episodes": 2, "runs_per_episode": 2,
         "workloads": [{"name": "w", "work_units": 0.3}], "seeds": [0, 1]}


# config ---------------------------------------------------------------------

def test_unknown_keys_rejected():
    with pytest.raises(ConfigInvalid, match="bogus"):
        load_config({**SMALL, "bogus": 1})
    with pytest.raises(ConfigInvalid, match="workloads"):
        load_config({**SMALL, "workloads": [{"name": "w", "wrk": 1}]})
    with pytest.raises(ConfigInvalid):
        load_config({**SMALL, "policy": "turbo"})
    with pytest.raises(ConfigInvalid):
        load_config({**SMALL, "policy": "rl", "rl": {"seed": 3}})


def test_yaml_and_json_agree(tmp_path):
    import yaml
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(SMALL))
    (tmp_path / "c.json").write_text(json.dumps(SMALL))
    assert load_config(tmp_path / "c.yaml") == load_config(tmp_path / "c.json") == load_config(SMALL)


# run layout and reproducibility ---------------------------------------------

def test_run_layout_and_verify(tmp_path):
    d = run(load_config(SMALL), out=str(tmp_path))
    for name in ("config.json", "transitions.jsonl", "episodes.jsonl", "safety_events.jsonl", "summary.json"):
        assert (d / name).exists()
    assert verify(d) == []
    summary = json.loads((d / "summary.json").read_text())
    row = summary["rows"][0]
    assert row["n_seeds"] == 2 and row["seeds"] == [0, 1]
    evals = [json.loads(l) for l in (d / "episodes.jsonl").read_text().splitlines()]
    evals = [r["energy_j"] for r in evals if r["phase"] == "eval"]
    assert row["energy_j_std"] == pytest.approx(abs(evals[0] - evals[1]) / np.sqrt(2), rel=1e-12)


def test_rerun_is_identical(tmp_path):
    a = run(load_config(SMALL), out=str(tmp_path / "a"))
    b = run(load_config(SMALL), out=str(tmp_path / "b"))
    for name in ("episodes.jsonl", "transitions.jsonl", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_verify_detects_tampering(tmp_path):
    d = run(load_config(SMALL), out=str(tmp_path))
    s = json.loads((d / "summary.json").read_text())
    s["rows"][0]["energy_j_mean"] += 1.0
    (d / "summary.json").write_text(json.dumps(s))
    assert verify(d)


def test_rl_cell_runs(tmp_path):
    cfg = load_config({**SMALL, "policy": "rl", "seeds": [0],
                       "rl": {"batch_size": 4, "model_epochs": 5, "profiler_hidden": 8, "temp_hidden": 8,
                              "model_hidden": 8}})
    d = run(cfg, out=str(tmp_path))
    assert verify(d) == []
    assert len((d / "transitions.jsonl").read_text().splitlines()) == 4


def test_summarize_by_hand():
    rows = [{"policy": "p", "workload": "w", "seed": s, "makespan_s": m, "energy_j": e, "peak_temp_c": 40.0,
             "return_profiler": 0.0, "return_temp": 0.0} for s, m, e in [(0, 1.0, 2.0), (1, 3.0, 6.0)]]
    r = summarize(rows)["rows"][0]
    assert r["makespan_s_mean"] == 2.0 and r["makespan_s_std"] == pytest.approx(np.sqrt(2.0))
    assert r["energy_j_std"] == pytest.approx(np.sqrt(8.0))


# latency --------------------------------------------------------------------

def test_latency_worked_example():
    rep = latency_report(LatencyLedger(3.07, 0.05, 0.358))
    assert rep.t_total_s == pytest.approx(3.478, abs=1e-12)
    assert rep.t_table_s == 27_000.0
    assert round(rep.first_decision_speedup) == 7_763
    assert round(rep.subsequent_speedup) == 75_419
    assert "rounding" in rep.caveat or "rounds" in rep.caveat


def test_latency_zero_components():
    rep = latency_report(LatencyLedger(0.0, 0.0, 0.0))
    assert rep.first_decision_speedup is None and rep.subsequent_speedup is None
    assert "undefined" in "\n".join(rep.lines())
    with pytest.raises(ValueError):
        LatencyLedger(-1.0, 0.0, 0.0)


def test_ledger_from_samples_and_timer():
    led = LatencyLedger.from_samples({"llm": [3.0, 3.14], "static": [0.05], "rl": [0.3, 0.4]})
    assert led.t_total_s == pytest.approx(3.07 + 0.05 + 0.35)
    ticks = iter(range(10))
    assert time_calls(lambda: None, n=3, clock=lambda: float(next(ticks))) == [1.0, 1.0, 1.0]
    assert latency_report(led, ProfileParams(1, 1, 1, 1, 2.0)).t_table_s == 2.0


# comparison -----------------------------------------------------------------

def test_rank_outcomes_hand_sorted():
    outcomes = {"a": [(2.0, 5.0, 40.0)], "b": [(1.0, 9.0, 50.0)], "c": [(2.0, 4.0, 45.0)]}
    rows = rank_outcomes(outcomes, baseline="a")
    assert [r.policy for r in rows] == ["b", "c", "a"]
    base = next(r for r in rows if r.policy == "a")
    assert base.makespan_norm == base.energy_norm == 1.0


def test_performance_ranks_first_by_makespan():
    cfg = load_config({**SMALL, "seeds": [0]})
    from dvfsmarl.expdriver.runner import compare
    rows = compare(cfg, ["powersave", "performance"], baseline="powersave")
    assert rows[0].policy == "performance"


# CLI ------------------------------------------------------------------------

def test_cli_latency(capsys):
    assert main(["latency"]) == 0
    out = capsys.readouterr().out
    assert "3.478" in out and "7,763" in out


def test_cli_run_and_verify(tmp_path, capsys):
    (tmp_path / "c.json").write_text(json.dumps({**SMALL, "seeds": [0]}))
    assert main(["run", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "runs")]) == 0
    assert main(["verify", str(tmp_path / "runs" / "t")]) == 0


def test_cli_features_cost(capsys):
    assert main(["features", "cost"]) == 0
    assert "0.063" in capsys.readouterr().out


def test_cli_reports_config_errors(tmp_path, capsys):
    (tmp_path / "bad.json").write_text(json.dumps({**SMALL, "oops": 1}))
    assert main(["run", "--config", str(tmp_path / "bad.json")]) == 2
    assert "ConfigInvalid" in capsys.readouterr().err
