"""Ascending-CVaR variational optimisation on a statevector simulator."""

from .ansatz import HardwareEfficientAnsatz, QaoaAnsatz
from .metrics import GroundTruth, RunTrace, brute_force_ground, overlap, summarize
from .objective import ObjectiveSpec, cvar_from_samples, exact_cvar
from .optimizer import OptimizerConfig, minimize
from .problems import (
    DiagonalHamiltonian,
    MaxCutInstance,
    NumberPartitionInstance,
    PortfolioInstance,
    hamiltonian_for,
)
from .schedule import AscendingSchedule, alpha_sequence, run_ascending_cvar
from .statevector import RandomSource, StateVector

__version__ = "0.1.0"

__all__ = [
    "AscendingSchedule",
    "DiagonalHamiltonian",
    "GroundTruth",
    "HardwareEfficientAnsatz",
    "MaxCutInstance",
    "NumberPartitionInstance",
    "ObjectiveSpec",
    "OptimizerConfig",
    "PortfolioInstance",
    "QaoaAnsatz",
    "RandomSource",
    "RunTrace",
    "StateVector",
    "alpha_sequence",
    "brute_force_ground",
    "cvar_from_samples",
    "exact_cvar",
    "hamiltonian_for",
    "minimize",
    "overlap",
    "run_ascending_cvar",
    "summarize",
]
