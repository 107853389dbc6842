"""Trace-driven 802.11p EDCA simulation of odd/even multiple-description video."""

from .config import ScenarioConfig, load_config
from .runner import RunReport, compare_mappers, emit_plot_data, run_scenario

__all__ = ["ScenarioConfig", "load_config", "RunReport", "compare_mappers", "emit_plot_data", "run_scenario"]
__version__ = "0.1.0"
