"""Experiment runner and command line interface."""

from .config import Cell, ExperimentConfig, config_from_dict, load_config, m_from_rate
from .experiment import (
    ExperimentResult,
    SummaryRow,
    TrialRecord,
    run_experiment,
    run_trial,
    summary_csv,
    write_outputs,
)
from .tables import capacity_table, collision_probe

__all__ = [
    "Cell",
    "ExperimentConfig",
    "ExperimentResult",
    "SummaryRow",
    "TrialRecord",
    "capacity_table",
    "collision_probe",
    "config_from_dict",
    "load_config",
    "m_from_rate",
    "run_experiment",
    "run_trial",
    "summary_csv",
    "write_outputs",
]
