"""Dyna-style training loop for the profiler and temperature agents.

Each real step stores one transition per agent in the real buffers.  With
``planning_steps > 0`` the learned profiler model then imagines
``planning_steps`` alternative profiler actions from the same pre-step state;
the temperature agent's matching synthetic transition is obtained by pushing
the predicted power and makespan through the RC thermal surrogate.  Both
agents then learn from minibatches mixing real and synthetic experience.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ..agents import AgentConfig, D3QNAgent, ReplayBuffer
from ..env_model import DynamicsModel, RegressorConfig, derive_thermal, transitions_to_arrays
from ..transition import Transition
from .env import HierEnv
from .rewards import profiler_reward, temp_reward

MODES = ("model_free", "model_based")


@dataclass(frozen=True)
class MarlConfig:
    mode: str = "model_based"
    planning_steps: int = 5
    batch_size: int = 32
    planning_policy: str = "random"  # or "policy" (epsilon-greedy)
    planning_reward: str = "derived"  # reward formula on predicted channels, or "model" for the regressed reward
    sim_ratio: float = 0.5
    updates_per_step: int = 1
    model_train_every: int = 10
    model_warmup: int | None = None  # real transitions before the first fit; defaults to batch_size
    model_hidden: int = 64
    model_epochs: int = 300
    model_lr: float = 0.01
    model_optimizer: str = "adam"
    model_scaling: str = "minmax"  # or "identity": observations are already dimensionless
    profiler_hidden: int = 64
    temp_hidden: int = 64
    learning_rate: float = 0.001
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_horizon: int = 50
    buffer_capacity: int = 10000
    target_update_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.planning_steps < 0:
            raise ValueError("planning_steps must be >= 0")
        if (self.mode == "model_free") != (self.planning_steps == 0):
            raise ValueError("model_free requires planning_steps == 0 and model_based requires > 0")
        if self.planning_policy not in ("random", "policy"):
            raise ValueError("planning_policy must be 'random' or 'policy'")
        if self.planning_reward not in ("derived", "model"):
            raise ValueError("planning_reward must be 'derived' or 'model'")
        if not 0 <= self.sim_ratio <= 1:
            raise ValueError("sim_ratio must lie in [0, 1]")
        if self.batch_size < 1 or self.updates_per_step < 1 or self.model_train_every < 1:
            raise ValueError("batch_size, updates_per_step and model_train_every must be >= 1")

    def replace(self, **kw) -> "MarlConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def warmup(self) -> int:
        return self.batch_size if self.model_warmup is None else self.model_warmup

    def agent_config(self, n_state: int, n_hidden: int, n_actions: int, salt: int) -> AgentConfig:
        return AgentConfig(n_state, n_hidden, n_actions, self.learning_rate, self.gamma,
                           self.epsilon_start, self.epsilon_end, self.epsilon_horizon,
                           self.buffer_capacity, min(self.batch_size, self.buffer_capacity),
                           self.target_update_every, "adam", self.seed * 7919 + salt)


@dataclass
class EpisodeReport:
    episode: int
    mode: str
    steps: int
    real_transitions: int
    synthetic_profiler: int
    synthetic_temp: int
    return_profiler: float
    return_temp: float
    makespan_s: float
    energy_j: float
    peak_temp_c: float
    epsilon: float
    model_fits: int
    mean_loss_profiler: float | None
    mean_loss_temp: float | None
    safety_events: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class EvalReport:
    return_profiler: float
    return_temp: float
    makespan_s: float
    energy_j: float
    peak_temp_c: float
    actions: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class HierMarl:
    """Owns the agents, buffers and profiler model for one training run."""

    def __init__(self, env: HierEnv, config: MarlConfig):
        self.env = env
        self.config = config
        c = config
        self.profiler = D3QNAgent(c.agent_config(env.profiler_dim, c.profiler_hidden, env.n_profiler_actions, 1),
                                  "profiler")
        self.temp = D3QNAgent(c.agent_config(env.temp_dim, c.temp_hidden, env.n_temp_actions, 2), "temperature")
        cap = c.buffer_capacity
        self.b_prof = ReplayBuffer(cap, seed=c.seed * 31 + 1)
        self.b_temp = ReplayBuffer(cap, seed=c.seed * 31 + 2)
        self.b_prof_sim = ReplayBuffer(cap, seed=c.seed * 31 + 3)
        self.b_temp_sim = ReplayBuffer(cap, seed=c.seed * 31 + 4)
        self.model = DynamicsModel(RegressorConfig(env.profiler_dim + 2, c.model_hidden, env.profiler_dim + 1,
                                                   learning_rate=c.model_lr, epochs=c.model_epochs,
                                                   seed=c.seed, batch_size=c.batch_size,
                                                   optimizer=c.model_optimizer))
        self.model_fits = 0
        self._fit_size = 0
        self.rng = np.random.default_rng([c.seed, 99])
        self.episode = 0
        self.real_steps = 0
        self.synthetic_profiler = 0
        self.synthetic_temp = 0
        self.transition_log: list[dict] = []
        self.log_transitions = False

    # helpers -----------------------------------------------------------------
    def _greedy_profiler(self, s_p) -> int:
        return int(np.argmax(self.profiler.q_values(s_p)))

    def _plan_action(self, agent: D3QNAgent, state, eps: float) -> int:
        if self.config.planning_policy == "random":
            return int(self.rng.integers(agent.config.n_actions))
        return agent.select_action(state, eps)

    def _mixed_batch(self, real: ReplayBuffer, sim: ReplayBuffer) -> list[Transition]:
        beta = self.config.batch_size
        n_sim = int(round(beta * self.config.sim_ratio)) if len(sim) >= 1 else 0
        n_sim = min(n_sim, len(sim))
        return real.sample(beta - n_sim) + (sim.sample(n_sim) if n_sim else [])

    def model_condition(self, first_step_of_episode: bool) -> bool:
        c = self.config
        if c.planning_steps == 0 or len(self.b_prof) < c.warmup:
            return False
        if self.model_fits == 0:
            return True
        return first_step_of_episode and self.episode % c.model_train_every == 0 and len(self.b_prof) > self._fit_size

    def train_model(self) -> None:
        x, y = transitions_to_arrays(self.b_prof.items())
        self.model.fit(x, y, refit_scalers=True, identity_scalers=self.config.model_scaling == "identity")
        self.model_fits += 1
        self._fit_size = len(self.b_prof)

    def plan(self, s_p, temps, done: bool, eps: float) -> None:
        env = self.env
        k = env.step_index - 1  # the run that just executed
        for _ in range(self.config.planning_steps):
            a_p = self._plan_action(self.profiler, s_p, eps)
            avec = env.action_vec(a_p)
            out = self.model.predict_batch(np.concatenate([s_p, avec]))[0]
            s_p2 = tuple(float(v) for v in out[:-1])
            channels = env.profiler_channels(s_p2, k)
            if self.config.planning_reward == "derived":
                _, tg = env.workload_at(k)
                r_p = profiler_reward(channels["energy_j"], channels["makespan_s"], tg, env.c_th, env.c_st).r_profiler
            else:
                r_p = float(np.clip(out[-1], -1.0, 1.0))
            self.b_prof_sim.add(Transition(s_p, a_p, r_p, s_p2, done, avec))
            self.synthetic_profiler += 1

            s_t = env.temp_state(a_p, temps)
            a_t = self._plan_action(self.temp, s_t, eps)
            action = env.decode(a_p, a_t, temps)
            t2 = derive_thermal(channels, env.spec, temps, action.active_cores)
            r_t = temp_reward(t2, env.temp_threshold)
            s_t2 = env.temp_state(self._greedy_profiler(s_p2), t2)
            self.b_temp_sim.add(Transition(s_t, a_t, r_t, s_t2, done))
            self.synthetic_temp += 1

    # Algorithm ------------------------------------------------------------------
    def run_episode(self) -> EpisodeReport:
        env, c = self.env, self.config
        ep = self.episode
        eps = self.profiler.epsilon(ep)
        s_p = env.reset(seed=int(np.random.SeedSequence([c.seed, ep]).generate_state(1)[0]))
        ret_p = ret_t = 0.0
        makespan = energy = 0.0
        peak = float(max(env.state.temps_c))
        losses_p: list[float] = []
        losses_t: list[float] = []
        n_events = 0
        steps = 0
        while True:
            temps = env.state.temps_c
            a_p = self.profiler.select_action(s_p, eps)
            s_t = env.temp_state(a_p)
            a_t = self.temp.select_action(s_t, eps)
            res = env.step(a_p, a_t)
            steps += 1
            self.real_steps += 1
            s_p2 = res.profiler_state
            s_t2 = env.temp_state(self._greedy_profiler(s_p2))
            tp = Transition(s_p, a_p, res.rewards.r_profiler, s_p2, res.done, env.action_vec(a_p))
            tt = Transition(s_t, a_t, res.rewards.r_temp, s_t2, res.done)
            self.b_prof.add(tp)
            self.b_temp.add(tt)
            if self.log_transitions:
                self.transition_log.append({"episode": ep, "step": steps - 1, "profiler": tp.to_dict(),
                                            "temperature": tt.to_dict(), "action": res.action.to_dict(),
                                            "outcome": {k: v for k, v in res.outcome.to_dict().items()
                                                        if k != "end_state"}})

            if self.model_condition(first_step_of_episode=steps == 1):
                self.train_model()
            if c.planning_steps > 0 and self.model_fits > 0:
                self.plan(s_p, temps, res.done, eps)

            if len(self.b_prof) >= c.batch_size:
                for _ in range(c.updates_per_step):
                    losses_p.append(self.profiler.learn_step(self._mixed_batch(self.b_prof, self.b_prof_sim)))
                    losses_t.append(self.temp.learn_step(self._mixed_batch(self.b_temp, self.b_temp_sim)))

            ret_p += res.rewards.r_profiler
            ret_t += res.rewards.r_temp
            makespan += res.outcome.makespan_s
            energy += res.outcome.energy_j
            peak = max(peak, res.outcome.peak_temp_c)
            n_events += len(res.events)
            s_p = s_p2
            if res.done:
                break
        self.episode += 1
        return EpisodeReport(ep, c.mode, steps, self.real_steps, self.synthetic_profiler, self.synthetic_temp,
                             ret_p, ret_t, makespan, energy, peak, eps, self.model_fits,
                             float(np.mean(losses_p)) if losses_p else None,
                             float(np.mean(losses_t)) if losses_t else None, n_events)

    def evaluate(self, seed: int = 12345, env: HierEnv | None = None) -> EvalReport:
        """Greedy rollout on a separate environment copy; nothing is stored or learned."""
        env = env or self.env.clone()
        s_p = env.reset(seed=seed)
        rep = EvalReport(0.0, 0.0, 0.0, 0.0, float(max(env.state.temps_c)))
        while not env.done:
            a_p = self._greedy_profiler(s_p)
            a_t = int(np.argmax(self.temp.q_values(env.temp_state(a_p))))
            res = env.step(a_p, a_t)
            rep.return_profiler += res.rewards.r_profiler
            rep.return_temp += res.rewards.r_temp
            rep.makespan_s += res.outcome.makespan_s
            rep.energy_j += res.outcome.energy_j
            rep.peak_temp_c = max(rep.peak_temp_c, res.outcome.peak_temp_c)
            rep.actions.append(res.action.to_dict())
            s_p = res.profiler_state
        return rep

    def train(self, episodes: int, callback: Callable[[EpisodeReport], bool | None] | None = None
              ) -> list[EpisodeReport]:
        reports = []
        for _ in range(episodes):
            rep = self.run_episode()
            reports.append(rep)
            if callback is not None and callback(rep):
                break
        return reports


def run_episode(system: HierMarl) -> EpisodeReport:
    return system.run_episode()


# Oracle and sample-efficiency harness ------------------------------------------

def static_returns(env: HierEnv, seed: int = 12345, temp_index: int = 0) -> np.ndarray:
    """Profiler return of every fixed profiler action (temperature index held fixed)."""
    out = np.zeros(env.n_profiler_actions)
    for a in range(env.n_profiler_actions):
        e = env.clone()
        e.reset(seed=seed)
        total = 0.0
        while not e.done:
            total += e.step(a, temp_index).rewards.r_profiler
        out[a] = total
    return out


@dataclass
class EfficiencyRun:
    seed: int
    mode: str
    reached: bool
    real_transitions: int
    episodes: int
    eval_returns: list[float]


@dataclass
class SampleEfficiencyReport:
    threshold: float
    oracle_best: float
    budget_episodes: int
    runs: list[EfficiencyRun]

    def transitions(self, mode: str) -> np.ndarray:
        return np.array([r.real_transitions for r in self.runs if r.mode == mode], dtype=float)

    def summary(self) -> dict:
        out = {"threshold": self.threshold, "oracle_best": self.oracle_best,
               "budget_episodes": self.budget_episodes}
        for mode in MODES:
            t = self.transitions(mode)
            rs = [r for r in self.runs if r.mode == mode]
            out[mode] = {"seeds": [r.seed for r in rs], "transitions": t.tolist(),
                         "mean": float(t.mean()) if t.size else None,
                         "median": float(np.median(t)) if t.size else None,
                         "std": float(t.std(ddof=1)) if t.size > 1 else 0.0,
                         "reached": sum(r.reached for r in rs)}
        mf, mb = out["model_free"]["mean"], out["model_based"]["mean"]
        out["ratio_mb_over_mf"] = (mb / mf) if mf else None
        return out

    def to_dict(self) -> dict:
        return {"summary": self.summary(), "runs": [asdict(r) for r in self.runs]}


def time_to_threshold(env: HierEnv, config: MarlConfig, threshold: float, budget_episodes: int,
                      eval_seed: int = 12345) -> EfficiencyRun:
    system = HierMarl(env.clone(), config)
    eval_env = env.clone()
    returns: list[float] = []
    for _ in range(budget_episodes):
        system.run_episode()
        r = system.evaluate(eval_seed, eval_env.clone()).return_profiler
        returns.append(r)
        if r >= threshold:
            return EfficiencyRun(config.seed, config.mode, True, system.real_steps, system.episode, returns)
    # censored at the budget
    return EfficiencyRun(config.seed, config.mode, False, system.real_steps, system.episode, returns)


def sample_efficiency(env: HierEnv, base: MarlConfig, seeds: Sequence[int], budget_episodes: int,
                      threshold_fraction: float = 0.9, planning_steps: int = 5,
                      eval_seed: int = 12345) -> SampleEfficiencyReport:
    """Real transitions each mode needs before its greedy policy closes a fraction of the gap between
    the average fixed action (what a uniform guess earns) and the best fixed action."""
    ret = static_returns(env, eval_seed)
    oracle = float(ret.max())
    threshold = float(ret.mean()) + threshold_fraction * (oracle - float(ret.mean()))
    runs = []
    for seed in seeds:
        for mode, zeta in (("model_free", 0), ("model_based", planning_steps)):
            cfg = base.replace(mode=mode, planning_steps=zeta, seed=seed)
            runs.append(time_to_threshold(env, cfg, threshold, budget_episodes, eval_seed))
    return SampleEfficiencyReport(threshold, oracle, budget_episodes, runs)
