"""Slotted network simulation, parameter sweeps and result output."""
from .engine import BACKPRESSURE, STATIC, InvalidConfig, RunResult, Simulation, run
from .experiments import SweepRow, sweep
from .metrics import StabilityReport, drift_bound, jain_index, stability_report
from .output import emit

__all__ = [
    "BACKPRESSURE", "STATIC", "InvalidConfig", "RunResult", "Simulation", "run",
    "SweepRow", "sweep", "StabilityReport", "drift_bound", "jain_index",
    "stability_report", "emit",
]
