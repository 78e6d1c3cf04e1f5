"""Greedy, reluctant and mixed single-spin-flip descent on the SK spin glass."""

__version__ = "0.1.0"

from .analysis import ScalingFit, fit_power_law, summarize
from .descent import DescentParams, RunRecord, TieBreak, descend, random_initial, select_move
from .harness import (
    AggregateResult,
    ExperimentPlan,
    run_fixed_budget,
    run_fixed_restarts,
    run_tau_scan,
)
from .oracle import basin_census, exact_solve, quenched_ground_energy
from .sk_model import (
    Instance,
    SpinState,
    apply_flip,
    delta_energy,
    energy,
    generate_instance,
    init_state,
    load_instance,
    save_instance,
)

__all__ = [
    "AggregateResult",
    "DescentParams",
    "ExperimentPlan",
    "Instance",
    "RunRecord",
    "ScalingFit",
    "SpinState",
    "TieBreak",
    "apply_flip",
    "basin_census",
    "delta_energy",
    "descend",
    "energy",
    "exact_solve",
    "fit_power_law",
    "generate_instance",
    "init_state",
    "load_instance",
    "quenched_ground_energy",
    "random_initial",
    "run_fixed_budget",
    "run_fixed_restarts",
    "run_tau_scan",
    "save_instance",
    "select_move",
    "summarize",
]
