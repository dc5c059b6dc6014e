"""Run configuration: one JSON or YAML file with a closed set of keys.

Example (YAML)::

    run_id: ondemand-demo
    policy: ondemand          # performance | powersave | ondemand | conservative
                              # | schedutil | table_precise | rl
    platform: {}              # PlatformSpec overrides; {} keeps the defaults
    workloads:
      - {name: default, work_units: 4.0, parallel_fraction: 0.9, mem_bound_factor: 0.3}
    episodes: 20
    runs_per_episode: 5
    seeds: [0, 1]
    rl: {}                    # MarlConfig overrides when policy == rl
    safety: null              # SafetyConfig overrides, or null for no safety layer
    safety_conservative: true
    finetune_samples: 0
    table_rho: 1
    eval_seed: 12345
    out: runs
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..errors import ConfigInvalid
from ..governors import GOVERNOR_KINDS
from ..hier_marl.orchestrator import MarlConfig
from ..hier_marl.safety import SafetyConfig
from ..platform_sim import PlatformSpec, WorkloadSpec

POLICIES = GOVERNOR_KINDS + ("rl",)


@dataclass(frozen=True)
class RunConfig:
    run_id: str = "run"
    policy: str = "ondemand"
    platform: dict = field(default_factory=dict)
    workloads: tuple[dict, ...] = ({},)
    episodes: int = 10
    runs_per_episode: int = 5
    seeds: tuple[int, ...] = (0,)
    rl: dict = field(default_factory=dict)
    safety: dict | None = None
    safety_conservative: bool = True
    finetune_samples: int = 0
    table_rho: int = 1
    eval_seed: int = 12345
    workers: int = 1
    out: str = "runs"

    def __post_init__(self):
        object.__setattr__(self, "workloads", tuple(dict(w) for w in self.workloads))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.policy not in POLICIES:
            raise ConfigInvalid(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.seeds:
            raise ConfigInvalid("need at least one seed")
        if self.episodes < 1 or self.runs_per_episode < 1:
            raise ConfigInvalid("episodes and runs_per_episode must be >= 1")
        if not self.workloads:
            raise ConfigInvalid("need at least one workload")
        if self.table_rho < 1 or self.workers < 1:
            raise ConfigInvalid("table_rho and workers must be >= 1")
        # surface nested errors now rather than mid-run
        self.platform_spec()
        self.workload_specs()
        self.safety_config()
        if self.policy == "rl":
            self.marl_config(self.seeds[0])

    def platform_spec(self) -> PlatformSpec:
        return _build(PlatformSpec, self.platform, "platform")

    def workload_specs(self) -> list[WorkloadSpec]:
        specs = [_build(WorkloadSpec, w, f"workloads[{i}]") for i, w in enumerate(self.workloads)]
        names = [w.name for w in specs]
        if len(set(names)) != len(names):
            raise ConfigInvalid(f"workload names must be unique, got {names}")
        return specs

    def safety_config(self) -> SafetyConfig | None:
        return None if self.safety is None else _build(SafetyConfig.from_dict, self.safety, "safety",
                                                       keys={f.name for f in fields(SafetyConfig)})

    def marl_config(self, seed: int) -> MarlConfig:
        if "seed" in self.rl:
            raise ConfigInvalid("rl.seed is set per cell from 'seeds'")
        return _build(MarlConfig, {**self.rl, "seed": seed}, "rl")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["workloads"] = [dict(w) for w in self.workloads]
        d["seeds"] = list(self.seeds)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _build(factory, d, where: str, keys: set | None = None):
    if not isinstance(d, dict):
        raise ConfigInvalid(f"{where} must be a mapping")
    allowed = keys if keys is not None else {f.name for f in fields(factory)}
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigInvalid(f"{where}: unknown keys {unknown}")
    try:
        return factory(**d) if keys is None else factory(d)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{where}: {exc}") from None


def load_config(source) -> RunConfig:
    """Parse a JSON/YAML path, a text blob or an already-decoded mapping."""
    if isinstance(source, dict):
        raw = source
    else:
        p = Path(source)
        text = p.read_text() if p.exists() else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError:
            try:
                raw = yaml.safe_load(text)
            except yaml.YAMLError as exc:
                raise ConfigInvalid(f"cannot parse config: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a mapping")
    return _build(RunConfig, raw, "config")
