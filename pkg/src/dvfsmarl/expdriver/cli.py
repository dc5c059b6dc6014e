"""Command-line entry point: ``dvfsmarl <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import DvfsError


def _dump(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True, default=str))


def _load(args):
    from .config import load_config, RunConfig
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = [args.seed]
    if getattr(args, "policy", None):
        overrides["policy"] = args.policy
    if overrides:
        cfg = RunConfig(**{**cfg.to_dict(), **overrides})
    return cfg


def cmd_sim_sweep(args) -> int:
    from ..governors import build_table
    cfg = _load(args)
    spec = cfg.platform_spec()
    wls = {w.name: w for w in cfg.workload_specs()}
    table = build_table(spec, wls, args.rho or cfg.table_rho, seed=args.seed or 0)
    out = Path(args.out or "table.json")
    table.save(out, raw_log_path=out.with_suffix(".sweep.jsonl"))
    _dump({"table": str(out), "meta": table.to_dict()["meta"]})
    return 0


def cmd_run(args) -> int:
    from .runner import run
    cfg = _load(args)
    if args.command == "train" and cfg.policy != "rl":
        cfg = type(cfg)(**{**cfg.to_dict(), "policy": "rl"})
    path = run(cfg, args.out)
    print(path)
    print((path / "summary.json").read_text())
    return 0


def cmd_compare(args) -> int:
    from .runner import compare, rank_rows_to_dicts
    cfg = _load(args)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    rows = compare(cfg, policies, args.baseline)
    for r in rows:
        print(f"{r.rank:>2} {r.policy:<14} makespan {r.makespan_mean:8.3f}±{r.makespan_std:.3f} s  "
              f"energy {r.energy_mean:8.3f}±{r.energy_std:.3f} J  peak {r.peak_temp_mean:6.2f} C  "
              f"norm {r.makespan_norm:.3f}/{r.energy_norm:.3f}")
    if args.json:
        _dump(rank_rows_to_dicts(rows))
    return 0


def cmd_features(args) -> int:
    from .. import features as F
    if args.fcmd == "cost":
        lat = [float(x) for x in args.latencies.split(",")] if args.latencies else []
        _dump(F.extraction_cost(args.n, args.price, lat, args.hours, args.rate).to_dict())
        return 0
    cache = F.FeatureCache(args.cache) if args.cache else F.fixture_cache()
    if args.fcmd == "agree":
        _dump(F.agreement(cache.records(), strict=not args.skip_incomplete).to_dict())
        return 0
    if args.fcmd == "encode":
        rec = cache.get(args.benchmark, args.model)
        _dump({"benchmark": rec.benchmark, "model": rec.model, "features": rec.features.as_dict(),
               "encoded": list(F.encode(rec.features))})
        return 0
    # extract
    source = Path(args.source).read_text() if args.source else F.fixture_sources().get(args.benchmark, "")
    if args.prompt_only:
        print(F.emit_prompt(args.benchmark, source))
        return 0
    prompt = F.emit_prompt(args.benchmark, source) if source else ""
    rec = F.extract("live" if args.live else "cached", prompt, args.model, args.benchmark, cache,
                    source_code=source or None)
    _dump({"benchmark": rec.benchmark, "model": rec.model, "valid": rec.valid, "degraded": rec.degraded,
           "features": rec.features.as_dict() if rec.features else None,
           "syntactic": rec.syntactic.to_dict() if rec.syntactic else F.count_syntactic(source).to_dict(),
           "latency_ms": rec.latency_ms, "cost_usd": rec.cost_usd, "error": rec.error})
    return 0


def cmd_transfer(args) -> int:
    from ..platform_sim import PlatformSpec, WorkloadSpec
    from ..transfer import collect_transfer_data, nshot_transfer, train_source_model, evaluate_model
    src = PlatformSpec()
    tgt = PlatformSpec(core_count=4, freq_table=tuple(f * 1.25 for f in src.freq_table[:10]),
                       core_efficiency=(1.0, 1.0, 0.9, 0.9), thermal_resistance=20.0, name="target")
    wl = WorkloadSpec()
    shots = tuple(int(s) for s in args.shots.split(","))
    src_data = collect_transfer_data(src, wl, args.samples, args.seed)
    model = train_source_model(src_data, seed=args.seed)
    tgt_data = collect_transfer_data(tgt, wl, args.samples, args.seed + 1)
    reports = nshot_transfer(model, tgt_data, shots, seed=args.seed)
    _dump({"in_domain": evaluate_model(model, src_data, 0).to_dict(),
           "target": [r.to_dict() for r in reports]})
    return 0


def cmd_latency(args) -> int:
    from .latency import LatencyLedger, ProfileParams, latency_report
    rep = latency_report(LatencyLedger(args.t_llm, args.t_static, args.t_rl),
                         ProfileParams(args.m, args.k, args.workloads, args.rho, args.t_bar))
    for line in rep.lines():
        print(line)
    return 0


def cmd_verify(args) -> int:
    from .runner import verify
    problems = verify(args.run_dir)
    for p in problems:
        print(p, file=sys.stderr)
    print("ok" if not problems else f"{len(problems)} mismatches")
    return 0 if not problems else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dvfsmarl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON or YAML run config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)

    sim = sub.add_parser("sim", help="simulator utilities")
    simsub = sim.add_subparsers(dest="simcmd", required=True)
    sw = simsub.add_parser("sweep", help="build the exhaustive lookup table")
    common(sw)
    sw.add_argument("--rho", type=int, default=None)
    sw.set_defaults(fn=cmd_sim_sweep)

    for name in ("train", "eval", "run"):
        p = sub.add_parser(name, help=f"{name} a campaign from a config")
        common(p)
        p.add_argument("--policy", default=None)
        p.set_defaults(fn=cmd_run)

    cp = sub.add_parser("compare", help="rank policies")
    common(cp)
    cp.add_argument("--policies", default="performance,powersave,ondemand,conservative,schedutil")
    cp.add_argument("--baseline", default=None)
    cp.add_argument("--json", action="store_true")
    cp.set_defaults(fn=cmd_compare)

    fp = sub.add_parser("features", help="semantic feature pipeline")
    fsub = fp.add_subparsers(dest="fcmd", required=True)
    ex = fsub.add_parser("extract")
    ex.add_argument("--benchmark", required=True)
    ex.add_argument("--model", default="model_a")
    ex.add_argument("--cache", default=None)
    ex.add_argument("--source", default=None)
    ex.add_argument("--live", action="store_true")
    ex.add_argument("--prompt-only", action="store_true")
    en = fsub.add_parser("encode")
    en.add_argument("--benchmark", required=True)
    en.add_argument("--model", default="model_a")
    en.add_argument("--cache", default=None)
    ag = fsub.add_parser("agree")
    ag.add_argument("--cache", default=None)
    ag.add_argument("--skip-incomplete", action="store_true")
    co = fsub.add_parser("cost")
    co.add_argument("--n", type=int, default=42)
    co.add_argument("--price", type=float, default=0.0015)
    co.add_argument("--latencies", default="")
    co.add_argument("--hours", type=float, default=8.0)
    co.add_argument("--rate", type=float, default=50.0)
    for p in (ex, en, ag, co):
        p.set_defaults(fn=cmd_features, cache=getattr(p, "cache", None))

    tr = sub.add_parser("transfer", help="0/n-shot transfer between two simulated platforms")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--shots", default="0,10,20,50")
    tr.add_argument("--samples", type=int, default=200)
    tr.set_defaults(fn=cmd_transfer)

    la = sub.add_parser("latency", help="decision latency vs table build cost")
    la.add_argument("--t-llm", type=float, default=3.07)
    la.add_argument("--t-static", type=float, default=0.05)
    la.add_argument("--t-rl", type=float, default=0.358)
    la.add_argument("--m", type=int, default=6)
    la.add_argument("--k", type=int, default=12)
    la.add_argument("--workloads", type=int, default=15)
    la.add_argument("--rho", type=int, default=5)
    la.add_argument("--t-bar", type=float, default=5.0)
    la.set_defaults(fn=cmd_latency)

    ve = sub.add_parser("verify", help="recompute a run's summary from its logs")
    ve.add_argument("run_dir")
    ve.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DvfsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
