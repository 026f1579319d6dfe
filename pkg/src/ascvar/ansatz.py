"""Parameterised state preparation: hardware-efficient ansatz and QAOA."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .problems import DiagonalHamiltonian, NumberPartitionInstance
from .statevector import StateVector, apply_cz, new_plus_state, new_zero_state


@dataclass(frozen=True)
class HardwareEfficientAnsatz:
    """R_y layer followed by ``layers`` blocks of (CZ on every pair i<j, R_y layer).

    Parameters are layer-major: ``params.reshape(layers + 1, n_qubits)[l, q]``
    is the angle of qubit ``q`` in rotation layer ``l``.
    """

    n_qubits: int
    layers: int = 1

    def __post_init__(self):
        if self.n_qubits < 1 or self.layers < 1:
            raise ValueError("need n_qubits >= 1 and layers >= 1")

    @property
    def param_count(self) -> int:
        return self.n_qubits * (1 + self.layers)

    def prepare(self, params) -> StateVector:
        return hea_prepare(self, params)


@dataclass(frozen=True)
class QaoaAnsatz:
    """``layers`` rounds of cost phase then mixer on ``|+>``; params ``(g1, b1, ..., gp, bp)``."""

    hamiltonian: DiagonalHamiltonian
    layers: int = 1

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    @property
    def param_count(self) -> int:
        return 2 * self.layers

    def prepare(self, params) -> StateVector:
        return qaoa_prepare(self, params)


def param_count(ansatz) -> int:
    return ansatz.param_count


def _as_params(ansatz, params) -> np.ndarray:
    theta = np.asarray(params, dtype=float).reshape(-1)
    if theta.size != ansatz.param_count:
        raise ValueError(f"{type(ansatz).__name__} takes {ansatz.param_count} parameters, got {theta.size}")
    return theta


@lru_cache(maxsize=32)
def all_pairs_cz_signs(n: int) -> np.ndarray:
    """Diagonal of the product of CZ(i, j) over all i<j.

    A basis state with Hamming weight w picks up (-1)^(w choose 2).
    """
    idx = np.arange(1 << n, dtype=np.int64)
    w = np.zeros_like(idx)
    for q in range(n):
        w += (idx >> q) & 1
    signs = np.where((w * (w - 1) // 2) % 2 == 0, 1.0, -1.0)
    signs.setflags(write=False)
    return signs


def apply_cz_all_pairs(state: StateVector, gatewise: bool = False) -> StateVector:
    if gatewise:
        for i in range(state.n_qubits):
            for j in range(i + 1, state.n_qubits):
                apply_cz(state, i, j)
        return state
    kernels.scale_real(state.amplitudes, all_pairs_cz_signs(state.n_qubits))
    return state


def hea_prepare(ansatz: HardwareEfficientAnsatz, params) -> StateVector:
    theta = _as_params(ansatz, params).reshape(ansatz.layers + 1, ansatz.n_qubits)
    state = new_zero_state(ansatz.n_qubits)
    kernels.ry_layer(state.amplitudes, np.ascontiguousarray(theta[0]))
    for layer in range(1, ansatz.layers + 1):
        apply_cz_all_pairs(state)
        kernels.ry_layer(state.amplitudes, np.ascontiguousarray(theta[layer]))
    return state


def qaoa_prepare(ansatz: QaoaAnsatz, params) -> StateVector:
    angles = _as_params(ansatz, params).reshape(ansatz.layers, 2)
    h = ansatz.hamiltonian
    state = new_plus_state(h.n_qubits)
    for gamma, beta in angles:
        kernels.phase(state.amplitudes, h.energies, float(gamma))
        kernels.mixer(state.amplitudes, h.n_qubits, float(beta))
    return state


def qaoa_gamma_bound(instance: NumberPartitionInstance) -> float:
    """``2*pi / (n_j * n_m)`` for the two smallest numbers ``n_j, n_m``."""
    nums = sorted(instance.numbers)
    if len(nums) < 2:
        raise ValueError("gamma bound needs at least two numbers")
    return 2.0 * math.pi / (nums[0] * nums[1])
