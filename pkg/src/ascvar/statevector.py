"""Exact statevector simulation for the gate set used by both ansatz families.

Gates act in place on ``StateVector.amplitudes`` and return the same state so
calls can be chained. Basis index bit ``q`` holds qubit ``q``.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels

MAX_QUBITS = 24


class CapacityError(ValueError):
    """Requested register is outside ``1 <= n <= MAX_QUBITS``."""


class QubitIndexError(IndexError):
    pass


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_size(self.n_qubits)
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, got shape {amps.shape}"
            )
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


class RandomSource:
    """Seeded PCG64 stream.

    ``derive`` gives an independent child stream keyed by strings or ints, so a
    run identity like ``("inst003", "alpha=0.1")`` always maps to the same
    stream regardless of execution order.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        self._entropy = [self.seed]
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self._entropy)))

    def derive(self, *keys) -> RandomSource:
        child = RandomSource.__new__(RandomSource)
        child.seed = self.seed
        child._entropy = self._entropy + [_stable_key(k) for k in keys]
        child.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(child._entropy)))
        return child

    def integer_seed(self) -> int:
        """A 32-bit integer drawn from this stream, for libraries that want an int seed."""
        return int(self.generator.integers(0, 2**31 - 1))

    def __repr__(self):
        return f"RandomSource(entropy={self._entropy})"


def _stable_key(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFF_FFFF
    return zlib.crc32(str(key).encode("utf-8"))


def _check_size(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"qubit count must be in [1, {MAX_QUBITS}], got {n!r}")


def _check_qubit(state, qubit):
    if not 0 <= qubit < state.n_qubits:
        raise QubitIndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def new_zero_state(n: int) -> StateVector:
    _check_size(n)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def new_plus_state(n: int) -> StateVector:
    """Uniform superposition, equal to a Hadamard on every wire of ``|0...0>``."""
    _check_size(n)
    return StateVector(n, np.full(1 << n, 1.0 / np.sqrt(1 << n), dtype=np.complex128))


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    _check_qubit(state, qubit)
    kernels.ry(state.amplitudes, qubit, float(theta))
    return state


def apply_h(state: StateVector, qubit: int) -> StateVector:
    _check_qubit(state, qubit)
    kernels.h(state.amplitudes, qubit)
    return state


def apply_cz(state: StateVector, q1: int, q2: int) -> StateVector:
    _check_qubit(state, q1)
    _check_qubit(state, q2)
    if q1 == q2:
        raise QubitIndexError("CZ needs two distinct qubits")
    kernels.cz(state.amplitudes, q1, q2)
    return state


def apply_mixer(state: StateVector, beta: float) -> StateVector:
    """Apply exp(-i beta X) on every qubit (an x-rotation by 2*beta)."""
    kernels.mixer(state.amplitudes, state.n_qubits, float(beta))
    return state


def apply_diagonal_phase(state: StateVector, gamma: float, hamiltonian) -> StateVector:
    """Multiply amplitude ``b`` by ``exp(-i gamma E_b)``."""
    if hamiltonian.n_qubits != state.n_qubits:
        raise ValueError(
            f"hamiltonian acts on {hamiltonian.n_qubits} qubits, state has {state.n_qubits}"
        )
    kernels.phase(state.amplitudes, hamiltonian.energies, float(gamma))
    return state


def probabilities(state: StateVector) -> np.ndarray:
    a = state.amplitudes
    return a.real * a.real + a.imag * a.imag


def sample_histogram(state: StateVector, shots: int, rng: RandomSource) -> np.ndarray:
    """Counts per basis index for ``shots`` independent measurements."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = probabilities(state)
    p = p / p.sum()
    return rng.generator.multinomial(int(shots), p)


def sample_counts(state: StateVector, shots: int, rng: RandomSource) -> np.ndarray:
    """Measured basis indices as a multiset (returned sorted by index)."""
    counts = sample_histogram(state, shots, rng)
    return np.repeat(np.arange(state.dim, dtype=np.int64), counts)
