"""Gate-level simulation of chaos-assisted tunneling in the quantum double-well map."""

__version__ = "0.1.0"

from .dynamics import MapParams, PhasePoint, classical_step, poincare_section
from .qstate import (
    StateVector,
    distribution,
    init_coherent,
    init_step,
    overlap,
    w_alive,
)
from .circuit import Circuit, compile_map, gate_count
from .noise import NoiseModel, noisy_iterate, run_ensemble
from .oracle import evolve_oracle, split_operator_step
from .analysis import (
    FitResult,
    fit_damped_cosine,
    fit_scaling,
    gamma_sweep,
    period_scan,
)

__all__ = [
    "MapParams", "PhasePoint", "classical_step", "poincare_section",
    "StateVector", "distribution", "init_coherent", "init_step", "overlap", "w_alive",
    "Circuit", "compile_map", "gate_count",
    "NoiseModel", "noisy_iterate", "run_ensemble",
    "evolve_oracle", "split_operator_step",
    "FitResult", "fit_damped_cosine", "fit_scaling", "gamma_sweep", "period_scan",
]
