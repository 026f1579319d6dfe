"""CVaR objectives from measured samples or exactly from the amplitude distribution."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .problems import DiagonalHamiltonian
from .statevector import RandomSource, StateVector, probabilities, sample_counts, sample_histogram

MODES = ("sampled", "exact")


def _check_alpha(alpha):
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def tail_size(alpha: float, k: int) -> int:
    """``ceil(alpha * k)``, robust to float noise like ``0.1 * 10000``."""
    _check_alpha(alpha)
    return max(1, math.ceil(round(alpha * k, 9)))


def shots_for_alpha(base_k: int, alpha: float) -> int:
    """Shots needed so that the alpha-tail still holds about ``base_k`` samples."""
    _check_alpha(alpha)
    return math.ceil(round(base_k / alpha, 9))


@dataclass(frozen=True)
class EnergySamples:
    energies: np.ndarray

    def __post_init__(self):
        e = np.sort(np.asarray(self.energies, dtype=float).reshape(-1))
        if e.size < 1:
            raise ValueError("need at least one sample")
        object.__setattr__(self, "energies", e)

    @property
    def k(self) -> int:
        return self.energies.size


@dataclass(frozen=True)
class ObjectiveSpec:
    alpha: float = 1.0
    base_shots: int = 1000
    mode: str = "sampled"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.base_shots < 1:
            raise ValueError("base_shots must be >= 1")

    def with_alpha(self, alpha: float) -> ObjectiveSpec:
        return dataclasses.replace(self, alpha=alpha)


def cvar_from_samples(samples: EnergySamples, alpha: float) -> float:
    """Mean of the ``ceil(alpha*K)`` smallest samples."""
    m = tail_size(alpha, samples.k)
    return float(samples.energies[:m].mean())


def cvar_from_histogram(counts: np.ndarray, sorted_energies: np.ndarray, alpha: float) -> float:
    """Same value as :func:`cvar_from_samples` given per-level counts.

    ``counts[i]`` is how often ``sorted_energies[i]`` was observed; the
    energies must be ascending.
    """
    total = int(counts.sum())
    m = tail_size(alpha, total)
    cum = np.cumsum(counts)
    k = int(np.searchsorted(cum, m, side="left"))
    # offsets from the boundary level keep a single-level tail exact
    ek = float(sorted_energies[k])
    return ek + float(np.dot(counts[:k], sorted_energies[:k] - ek)) / m


def exact_cvar(state: StateVector, hamiltonian: DiagonalHamiltonian, alpha: float) -> float:
    """Infinite-shot CVaR: mean energy of the lowest ``alpha`` probability mass."""
    _check_alpha(alpha)
    if hamiltonian.n_qubits != state.n_qubits:
        raise ValueError("state and hamiltonian sizes differ")
    p = probabilities(state)
    return exact_cvar_from_probabilities(p, hamiltonian, alpha)


def exact_cvar_from_probabilities(p: np.ndarray, hamiltonian: DiagonalHamiltonian, alpha: float) -> float:
    _check_alpha(alpha)
    p = p[hamiltonian.order]
    p = p / p.sum()
    e = hamiltonian.sorted_energies
    if alpha == 1.0:
        return float(np.dot(p, e))
    cum = np.cumsum(p)
    k = min(int(np.searchsorted(cum, alpha, side="left")), p.size - 1)
    ek = float(e[k])
    return ek + float(np.dot(p[:k], e[:k] - ek)) / alpha


def expectation(state: StateVector, hamiltonian: DiagonalHamiltonian) -> float:
    return float(np.dot(probabilities(state), hamiltonian.energies))


def sample_energies(
    state: StateVector, hamiltonian: DiagonalHamiltonian, shots: int, rng: RandomSource
) -> EnergySamples:
    idx = sample_counts(state, shots, rng)
    return EnergySamples(hamiltonian.energies[idx])


def evaluate(
    spec: ObjectiveSpec, state: StateVector, hamiltonian: DiagonalHamiltonian, rng: RandomSource
) -> tuple:
    """Return ``(value, shots_used)``; exact mode uses no shots.

    Sampled mode draws ``shots_for_alpha(base_shots, alpha)`` fresh shots.
    """
    if spec.mode == "exact":
        return exact_cvar(state, hamiltonian, spec.alpha), 0
    shots = shots_for_alpha(spec.base_shots, spec.alpha)
    counts = sample_histogram(state, shots, rng)[hamiltonian.order]
    return cvar_from_histogram(counts, hamiltonian.sorted_energies, spec.alpha), shots
