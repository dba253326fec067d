"""Delivery drones that also give uniform aerial coverage."""

from .sim_engine import ConfigError, RunMetrics, SimConfig, run, run_replicas, simulate

__all__ = ["ConfigError", "RunMetrics", "SimConfig", "run", "run_replicas", "simulate"]
__version__ = "0.1.0"
