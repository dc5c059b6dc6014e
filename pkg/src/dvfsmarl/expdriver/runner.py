"""Campaign runner, policy comparison and run verification.

Run directory layout::

    <out>/<run_id>/config.json
                   transitions.jsonl   one line per executed workload run
                   episodes.jsonl      training episodes and one "eval" row per cell
                   summary.json        mean / sample std over seeds of the eval rows
                   safety_events.jsonl
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..governors import Governor, build_table, table_schedule
from ..hier_marl.env import HierEnv, measure_targets
from ..hier_marl.orchestrator import HierMarl
from ..hier_marl.safety import SafetyLayer
from ..platform_sim import PlatformSpec, WorkloadSpec
from .config import RunConfig

METRICS = ("makespan_s", "energy_j", "peak_temp_c", "return_profiler", "return_temp")


def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _make_env(cfg: RunConfig, spec: PlatformSpec, wl: WorkloadSpec, seed: int) -> HierEnv:
    safety = None
    sc = cfg.safety_config()
    if sc is not None:
        safety = SafetyLayer(sc, spec, conservative=cfg.safety_conservative)
        safety.record_finetune(cfg.finetune_samples)
    return HierEnv(spec, [wl], [measure_targets(spec, wl, seed)], cfg.runs_per_episode, seed=seed, safety=safety)


def _run_row(cell: dict, episode: int, step: int, res) -> dict:
    return {**cell, "episode": episode, "step": step, "action": res.action.to_dict(),
            "rewards": res.rewards.to_dict(), "makespan_s": res.outcome.makespan_s,
            "energy_j": res.outcome.energy_j, "peak_temp_c": res.outcome.peak_temp_c,
            "throttled": res.outcome.throttled, "done": res.done}


def _fixed_episode(env: HierEnv, decide, seed: int, cell: dict, episode: int, log: list) -> dict:
    env.reset(seed=seed)
    totals = dict.fromkeys(METRICS, 0.0)
    totals["peak_temp_c"] = max(env.state.temps_c)
    step = 0
    events = 0
    while not env.done:
        res = env.step_action(decide(env))
        log.append(_run_row(cell, episode, step, res))
        totals["makespan_s"] += res.outcome.makespan_s
        totals["energy_j"] += res.outcome.energy_j
        totals["peak_temp_c"] = max(totals["peak_temp_c"], res.outcome.peak_temp_c)
        totals["return_profiler"] += res.rewards.r_profiler
        totals["return_temp"] += res.rewards.r_temp
        events += len(res.events)
        step += 1
    return {**cell, "episode": episode, "steps": step, "safety_events": events, **totals}


def run_cell(cfg: RunConfig, wl_index: int, seed: int) -> dict:
    """One (policy, workload, seed) job; returns its log lines and eval row."""
    spec = cfg.platform_spec()
    wl = cfg.workload_specs()[wl_index]
    cell = {"policy": cfg.policy, "workload": wl.name, "seed": seed}
    env = _make_env(cfg, spec, wl, seed)
    transitions: list[dict] = []
    episodes: list[dict] = []

    if cfg.policy == "rl":
        system = HierMarl(env, cfg.marl_config(seed))
        system.log_transitions = True
        for _ in range(cfg.episodes):
            rep = system.run_episode()
            episodes.append({**cell, "phase": "train", **rep.to_dict()})
        transitions = [{**cell, **t} for t in system.transition_log]
        ev_env = env.clone()
        ev = system.evaluate(cfg.eval_seed, ev_env)
        eval_row = {**cell, "episode": cfg.episodes, "steps": len(ev.actions), "safety_events": 0,
                    **{k: getattr(ev, k) for k in METRICS}}
    else:
        if cfg.policy == "table_precise":
            table = build_table(spec, {wl.name: wl}, cfg.table_rho, seed)
            fixed = table_schedule(table, wl.name, m=spec.m)

            def decide(e):
                return fixed
        else:
            gov = Governor(cfg.policy)

            def decide(e):
                return gov.decide(e.state, e.spec)
        for ep in range(cfg.episodes):
            if cfg.policy != "table_precise":
                gov.reset()
            row = _fixed_episode(env, decide, _seed(seed, ep), cell, ep, transitions)
            episodes.append({"phase": "train", **row})
        if cfg.policy != "table_precise":
            gov.reset()
        eval_row = _fixed_episode(env.clone(), decide, cfg.eval_seed, cell, cfg.episodes, [])
    events = [{**cell, **e.to_dict()} for e in (env.safety.events if env.safety is not None else [])]
    episodes.append({"phase": "eval", **eval_row})
    return {"key": (wl_index, seed), "transitions": transitions, "episodes": episodes, "events": events,
            "eval": eval_row}


def summarize(eval_rows: Sequence[Mapping]) -> dict:
    """Per (policy, workload): mean and sample std over seeds of each metric."""
    groups: dict[tuple[str, str], list[Mapping]] = {}
    for r in eval_rows:
        groups.setdefault((r["policy"], r["workload"]), []).append(r)
    rows = []
    for (policy, workload), rs in sorted(groups.items()):
        row = {"policy": policy, "workload": workload, "n_seeds": len(rs),
               "seeds": sorted(int(r["seed"]) for r in rs)}
        for k in METRICS:
            v = np.array([float(r[k]) for r in sorted(rs, key=lambda r: r["seed"])])
            row[f"{k}_mean"] = float(v.mean())
            row[f"{k}_std"] = float(v.std(ddof=1)) if len(v) > 1 else 0.0
        rows.append(row)
    return {"rows": rows}


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def run(cfg: RunConfig, out: str | None = None) -> Path:
    outdir = Path(out or cfg.out) / cfg.run_id
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = [(i, s) for i in range(len(cfg.workloads)) for s in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_cell, [cfg] * len(jobs), *zip(*jobs)))
    else:
        results = [run_cell(cfg, i, s) for i, s in jobs]
    results.sort(key=lambda r: r["key"])
    (outdir / "config.json").write_text(cfg.to_json() + "\n")
    _write_jsonl(outdir / "transitions.jsonl", (t for r in results for t in r["transitions"]))
    _write_jsonl(outdir / "episodes.jsonl", (e for r in results for e in r["episodes"]))
    _write_jsonl(outdir / "safety_events.jsonl", (e for r in results for e in r["events"]))
    summary = summarize([r["eval"] for r in results])
    (outdir / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return outdir


def verify(run_dir) -> list[str]:
    """Recompute the summary from episodes.jsonl; returns a list of mismatches (empty when consistent)."""
    run_dir = Path(run_dir)
    rows = [json.loads(line) for line in (run_dir / "episodes.jsonl").read_text().splitlines() if line.strip()]
    recomputed = summarize([r for r in rows if r.get("phase") == "eval"])
    stored = json.loads((run_dir / "summary.json").read_text())
    problems = []
    if len(recomputed["rows"]) != len(stored["rows"]):
        problems.append(f"row count {len(stored['rows'])} != recomputed {len(recomputed['rows'])}")
    for a, b in zip(stored["rows"], recomputed["rows"]):
        for k, v in b.items():
            w = a.get(k)
            if isinstance(v, float):
                if w is None or not math.isclose(v, w, rel_tol=1e-12, abs_tol=1e-12):
                    problems.append(f"{a['policy']}/{a['workload']} {k}: stored {w} != recomputed {v}")
            elif v != w:
                problems.append(f"{a['policy']}/{a['workload']} {k}: stored {w} != recomputed {v}")
    return problems


# Comparison -----------------------------------------------------------------

@dataclass
class RankRow:
    policy: str
    rank: int
    makespan_mean: float
    makespan_std: float
    energy_mean: float
    energy_std: float
    peak_temp_mean: float
    peak_temp_std: float
    makespan_norm: float
    energy_norm: float


def rank_outcomes(outcomes: Mapping[str, Sequence[tuple[float, float, float]]],
                  baseline: str | None = None) -> list[RankRow]:
    """Rank policies by mean makespan (energy breaks ties); normalize against ``baseline``."""
    if len(outcomes) < 2:
        raise ValueError("need at least two policies")
    stats = {}
    for p, rows in outcomes.items():
        a = np.asarray(rows, dtype=float).reshape(-1, 3)
        sd = a.std(axis=0, ddof=1) if len(a) > 1 else np.zeros(3)
        stats[p] = (a.mean(axis=0), sd)
    base = baseline or sorted(outcomes)[0]
    bm = stats[base][0]
    order = sorted(stats, key=lambda p: (stats[p][0][0], stats[p][0][1], p))
    out = []
    for i, p in enumerate(order, 1):
        mu, sd = stats[p]
        out.append(RankRow(p, i, mu[0], sd[0], mu[1], sd[1], mu[2], sd[2], mu[0] / bm[0], mu[1] / bm[1]))
    return out


def compare(cfg: RunConfig, policies: Sequence[str], baseline: str | None = None) -> list[RankRow]:
    """Evaluate each policy on every workload and seed of ``cfg`` and rank them."""
    outcomes: dict[str, list[tuple[float, float, float]]] = {}
    for p in policies:
        c = RunConfig(**{**cfg.to_dict(), "policy": p})
        for i in range(len(c.workloads)):
            for s in c.seeds:
                ev = run_cell(c, i, s)["eval"]
                outcomes.setdefault(p, []).append((ev["makespan_s"], ev["energy_j"], ev["peak_temp_c"]))
    return rank_outcomes(outcomes, baseline or policies[0])


def rank_rows_to_dicts(rows: Sequence[RankRow]) -> list[dict]:
    return [asdict(r) for r in rows]
