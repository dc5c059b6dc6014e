from ..actions import (ActionSpaceSizes, HierAction, action_space_sizes, decode_action, decode_profiler,
                       decode_temperature, encode_action, encode_profiler, encode_temperature)
from .env import HierEnv, StepResult, coolest_first, measure_targets
from .orchestrator import (EpisodeReport, EvalReport, HierMarl, MarlConfig, SampleEfficiencyReport,
                           run_episode, sample_efficiency, static_returns, time_to_threshold)
from .rewards import RewardBundle, TargetsBaseline, profiler_reward, shaped, temp_reward
from .safety import SafetyConfig, SafetyEvent, SafetyLayer, SafetyWatchdog, safety_filter

__all__ = [
    "ActionSpaceSizes", "HierAction", "action_space_sizes", "decode_action", "decode_profiler",
    "decode_temperature", "encode_action", "encode_profiler", "encode_temperature",
    "HierEnv", "StepResult", "coolest_first", "measure_targets",
    "EpisodeReport", "EvalReport", "HierMarl", "MarlConfig", "SampleEfficiencyReport",
    "run_episode", "sample_efficiency", "static_returns", "time_to_threshold",
    "RewardBundle", "TargetsBaseline", "profiler_reward", "shaped", "temp_reward",
    "SafetyConfig", "SafetyEvent", "SafetyLayer", "SafetyWatchdog", "safety_filter",
]
