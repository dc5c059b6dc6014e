"""Simulated multi-core DVFS scheduling with hierarchical model-based RL agents."""

__version__ = "0.1.0"
