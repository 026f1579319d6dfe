"""QUBO/Ising encodings, diagonal cost Hamiltonians and instance generators.

Bit convention throughout: bit ``i`` of a basis index is the binary variable
``x_i`` and its spin is ``z_i = 1 - 2 x_i`` (bit 0 -> spin +1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import networkx as nx
import numpy as np

from .statevector import MAX_QUBITS, CapacityError, RandomSource

EAGER_QUBITS = 20
_CHUNK = 1 << 16


@dataclass(frozen=True)
class QuboProblem:
    """``min_x  b.x + x.A.x + offset`` over ``x in {0,1}^n``; ``A`` is symmetrised."""

    linear: np.ndarray
    quadratic: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.linear, dtype=float).reshape(-1)
        a = np.asarray(self.quadratic, dtype=float)
        if a.shape != (b.size, b.size):
            raise ValueError(f"quadratic must be {b.size}x{b.size}, got {a.shape}")
        object.__setattr__(self, "linear", b)
        object.__setattr__(self, "quadratic", 0.5 * (a + a.T))

    @property
    def n(self) -> int:
        return self.linear.size

    def cost(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.linear @ x + x @ self.quadratic @ x + self.offset)


@dataclass(frozen=True)
class IsingModel:
    """``c.z + z.Q.z + constant`` with ``Q`` symmetric and zero on the diagonal."""

    linear: np.ndarray
    quadratic: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.linear, dtype=float).reshape(-1)
        q = np.asarray(self.quadratic, dtype=float)
        if q.shape != (c.size, c.size):
            raise ValueError(f"quadratic must be {c.size}x{c.size}, got {q.shape}")
        q = 0.5 * (q + q.T)
        diag = float(np.trace(q))
        q = q - np.diag(np.diag(q))
        object.__setattr__(self, "linear", c)
        object.__setattr__(self, "quadratic", q)
        object.__setattr__(self, "constant", float(self.constant) + diag)

    @property
    def n(self) -> int:
        return self.linear.size

    def cost(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(self.linear @ z + z @ self.quadratic @ z + self.constant)


def binary_to_spin(qubo: QuboProblem) -> IsingModel:
    """Substitute ``x_i = (1 - z_i)/2``; the offset keeps costs identical."""
    b, a = qubo.linear, qubo.quadratic
    row = a.sum(axis=1)
    c = -0.5 * b - 0.5 * row
    q = 0.25 * a
    constant = qubo.offset + 0.5 * b.sum() + 0.25 * a.sum()
    # IsingModel folds diag(q) into the constant (z_i^2 = 1)
    return IsingModel(c, q, constant)


def spins_of(indices, n: int) -> np.ndarray:
    """Spin matrix, one row per basis index: ``z_i = 1 - 2*bit_i``."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1, 1)
    bits = (idx >> np.arange(n, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def bits_of(index: int, n: int) -> np.ndarray:
    return (int(index) >> np.arange(n)) & 1


class DiagonalHamiltonian:
    """Energy of every computational basis state of an ``n``-qubit register.

    Built from an :class:`IsingModel`. Energies are materialised on first
    access (immediately for ``n <= 20``); :meth:`energy_of` works without
    materialising.
    """

    def __init__(self, ising: IsingModel, label: str = ""):
        n = ising.n
        if not 1 <= n <= MAX_QUBITS:
            raise CapacityError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
        self.ising = ising
        self.n_qubits = n
        self.label = label
        if n <= EAGER_QUBITS:
            _ = self.energies

    @classmethod
    def from_energies(cls, energies, label: str = "") -> DiagonalHamiltonian:
        """Wrap an explicit energy table (no Ising model behind it)."""
        e = np.asarray(energies, dtype=float).reshape(-1)
        n = int(e.size).bit_length() - 1
        if e.size < 2 or (1 << n) != e.size:
            raise ValueError(f"energy table length must be a power of two >= 2, got {e.size}")
        obj = cls.__new__(cls)
        obj.ising = None
        obj.n_qubits = n
        obj.label = label
        e = e.copy()
        e.setflags(write=False)
        obj.__dict__["energies"] = e
        return obj

    @cached_property
    def energies(self) -> np.ndarray:
        n = self.n_qubits
        dim = 1 << n
        out = np.empty(dim, dtype=float)
        c, q, k = self.ising.linear, self.ising.quadratic, self.ising.constant
        for start in range(0, dim, _CHUNK):
            z = spins_of(np.arange(start, min(dim, start + _CHUNK)), n)
            out[start:start + z.shape[0]] = z @ c + np.einsum("ij,ij->i", z @ q, z) + k
        out.setflags(write=False)
        return out

    @cached_property
    def order(self) -> np.ndarray:
        """Basis indices sorted by energy, ties broken by index."""
        return np.argsort(self.energies, kind="stable")

    @cached_property
    def sorted_energies(self) -> np.ndarray:
        return self.energies[self.order]

    def energy_of(self, index: int) -> float:
        if not 0 <= index < (1 << self.n_qubits):
            raise IndexError(f"basis index {index} out of range for {self.n_qubits} qubits")
        if "energies" in self.__dict__:
            return float(self.energies[index])
        return self.ising.cost(spins_of([index], self.n_qubits)[0])

    def __repr__(self):
        return f"DiagonalHamiltonian(n_qubits={self.n_qubits}, label={self.label!r})"


def energy_of(hamiltonian: DiagonalHamiltonian, basis_index: int) -> float:
    return hamiltonian.energy_of(basis_index)


# --------------------------------------------------------------------------
# problem instances
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxCutInstance:
    n_vertices: int
    edges: tuple  # ((i, j, w), ...) with i < j
    seed: Optional[int] = None

    def __post_init__(self):
        canon = {}
        for i, j, *w in self.edges:
            i, j = int(i), int(j)
            weight = float(w[0]) if w else 1.0
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
                raise ValueError(f"edge ({i}, {j}) outside {self.n_vertices} vertices")
            if not np.isfinite(weight):
                raise ValueError(f"non-finite weight on edge ({i}, {j})")
            a, b = min(i, j), max(i, j)
            canon[(a, b)] = canon.get((a, b), 0.0) + weight
        object.__setattr__(self, "edges", tuple((a, b, w) for (a, b), w in sorted(canon.items())))

    @property
    def n(self) -> int:
        return self.n_vertices

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_vertices))
        g.add_weighted_edges_from(self.edges)
        return g

    def cut_value(self, bits) -> float:
        return float(sum(w for i, j, w in self.edges if bits[i] != bits[j]))


@dataclass(frozen=True)
class NumberPartitionInstance:
    numbers: tuple
    seed: Optional[int] = None

    def __post_init__(self):
        nums = tuple(int(v) for v in self.numbers)
        if not nums:
            raise ValueError("need at least one number")
        if min(nums) < 1:
            raise ValueError("numbers must be positive integers")
        object.__setattr__(self, "numbers", nums)

    @property
    def n(self) -> int:
        return len(self.numbers)


@dataclass(frozen=True)
class PortfolioInstance:
    returns: np.ndarray
    covariance: np.ndarray
    risk: float
    budget: int
    penalty_weight: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        mu = np.asarray(self.returns, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        n = mu.size
        if cov.shape != (n, n):
            raise ValueError(f"covariance must be {n}x{n}, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-9:
            raise ValueError("covariance is not positive semidefinite")
        if self.risk <= 0:
            raise ValueError("risk factor q must be > 0")
        if not 0 <= int(self.budget) <= n:
            raise ValueError(f"budget must lie in [0, {n}], got {self.budget}")
        object.__setattr__(self, "returns", mu)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "budget", int(self.budget))
        if self.penalty_weight is None:
            object.__setattr__(self, "penalty_weight", default_penalty_weight(mu, cov, self.risk))
        elif self.penalty_weight <= 0:
            raise ValueError("penalty_weight must be > 0")

    @property
    def n(self) -> int:
        return self.returns.size

    def cost(self, x) -> float:
        """Mean-variance value to maximise (no penalty)."""
        x = np.asarray(x, dtype=float)
        return float(self.returns @ x - self.risk * x @ self.covariance @ x)


def default_penalty_weight(returns, covariance, risk) -> float:
    # 10x an upper bound on |C(x)|
    return 10.0 * (float(np.sum(returns)) + risk * float(np.abs(covariance).sum()))


# --------------------------------------------------------------------------
# Hamiltonian builders
# --------------------------------------------------------------------------


def maxcut_ising(instance: MaxCutInstance) -> IsingModel:
    n = instance.n_vertices
    q = np.zeros((n, n))
    const = 0.0
    for i, j, w in instance.edges:
        q[i, j] += 0.25 * w
        q[j, i] += 0.25 * w
        const -= 0.5 * w
    return IsingModel(np.zeros(n), q, const)


def maxcut_hamiltonian(instance: MaxCutInstance) -> DiagonalHamiltonian:
    """``E(x) = -(total weight of cut edges)``."""
    return DiagonalHamiltonian(maxcut_ising(instance), label="maxcut")


def numpart_ising(instance: NumberPartitionInstance) -> IsingModel:
    s = np.asarray(instance.numbers, dtype=float)
    return IsingModel(np.zeros(s.size), np.outer(s, s), 0.0)


def numpart_hamiltonian(instance: NumberPartitionInstance) -> DiagonalHamiltonian:
    """``E(x) = (sum_i z_i n_i)^2``."""
    return DiagonalHamiltonian(numpart_ising(instance), label="numpart")


def portfolio_qubo(instance: PortfolioInstance) -> QuboProblem:
    """``-C(x) + P (sum x - B)^2`` as a QUBO."""
    n = instance.n
    p, budget = instance.penalty_weight, instance.budget
    ones = np.ones(n)
    b = -instance.returns - 2.0 * p * budget * ones
    a = instance.risk * instance.covariance + p * np.outer(ones, ones)
    return QuboProblem(b, a, p * budget * budget)


def portfolio_hamiltonian(instance: PortfolioInstance) -> DiagonalHamiltonian:
    return DiagonalHamiltonian(binary_to_spin(portfolio_qubo(instance)), label="portfolio")


def hamiltonian_for(instance) -> DiagonalHamiltonian:
    if isinstance(instance, MaxCutInstance):
        return maxcut_hamiltonian(instance)
    if isinstance(instance, NumberPartitionInstance):
        return numpart_hamiltonian(instance)
    if isinstance(instance, PortfolioInstance):
        return portfolio_hamiltonian(instance)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def tie_tolerance_for(instance, hamiltonian: DiagonalHamiltonian) -> float:
    """Zero for integer-valued problems, relative 1e-9 for portfolios."""
    if isinstance(instance, PortfolioInstance):
        return 1e-9 * float(np.abs(hamiltonian.energies).max())
    return 0.0


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

MAXCUT_FAMILIES = ("random-nonregular", "k-regular")


def generate_maxcut_instance(
    n: int,
    family: str = "random-nonregular",
    param: float = 0.5,
    rng: Optional[RandomSource] = None,
    max_tries: int = 1000,
) -> MaxCutInstance:
    """Connected unweighted graph.

    ``random-nonregular``: G(n, p) with edge probability ``param``, resampled
    until connected and not regular. ``k-regular``: uniform random
    ``param``-regular graph, resampled until connected.
    """
    if n < 2:
        raise ValueError("need at least 2 vertices")
    rng = rng or RandomSource(0)
    gen = rng.generator
    if family == "random-nonregular":
        p = float(param)
        if not 0.0 < p <= 1.0:
            raise ValueError(f"edge probability must be in (0, 1], got {p}")
        if p == 1.0 or n == 2:
            raise ValueError(f"G({n}, {p}) can only produce regular graphs")
        iu, ju = np.triu_indices(n, k=1)
        for _ in range(max_tries):
            keep = gen.random(iu.size) < p
            edges = [(int(i), int(j), 1.0) for i, j in zip(iu[keep], ju[keep])]
            g = nx.Graph()
            g.add_nodes_from(range(n))
            g.add_edges_from((i, j) for i, j, _ in edges)
            degrees = {d for _, d in g.degree()}
            if nx.is_connected(g) and len(degrees) > 1:
                return MaxCutInstance(n, tuple(edges), seed=rng.seed)
        raise ValueError(f"no connected non-regular G({n}, {p}) graph in {max_tries} draws")
    if family == "k-regular":
        k = int(param)
        if not 0 < k < n or (n * k) % 2:
            raise ValueError(f"no {k}-regular graph on {n} vertices")
        for _ in range(max_tries):
            g = nx.random_regular_graph(k, n, seed=rng.integer_seed())
            if nx.is_connected(g):
                return MaxCutInstance(n, tuple((min(i, j), max(i, j), 1.0) for i, j in g.edges()), seed=rng.seed)
        raise ValueError(f"no connected {k}-regular graph on {n} vertices in {max_tries} draws")
    raise ValueError(f"unknown max-cut family {family!r}; expected one of {MAXCUT_FAMILIES}")


def generate_numpart_instance(count: int, bound: int, rng: Optional[RandomSource] = None) -> NumberPartitionInstance:
    """``count`` integers drawn uniformly from ``{1, ..., bound}``."""
    if count < 2:
        raise ValueError("need at least 2 numbers")
    if bound < 1:
        raise ValueError("bound must be >= 1")
    rng = rng or RandomSource(0)
    nums = rng.generator.integers(1, bound + 1, size=count)
    return NumberPartitionInstance(tuple(int(v) for v in nums), seed=rng.seed)


def generate_portfolio_instance(
    n: int,
    q: float = 0.5,
    rng: Optional[RandomSource] = None,
    factors: int = 3,
    factor_scale: float = 0.3,
    jitter: float = 0.01,
    penalty_weight: Optional[float] = None,
) -> PortfolioInstance:
    """Random returns on [0, 1), factor-model covariance, budget uniform on {0..n}."""
    if n < 2:
        raise ValueError("need at least 2 assets")
    if q <= 0:
        raise ValueError("risk factor q must be > 0")
    rng = rng or RandomSource(0)
    gen = rng.generator
    mu = gen.random(n)
    f = factor_scale * gen.standard_normal((n, factors))
    cov = f @ f.T / factors + jitter * np.eye(n)
    cov = 0.5 * (cov + cov.T)
    budget = int(gen.integers(0, n + 1))
    return PortfolioInstance(mu, cov, float(q), budget, penalty_weight, seed=rng.seed)


# --------------------------------------------------------------------------
# JSON documents
# --------------------------------------------------------------------------


def instance_to_dict(instance) -> dict:
    if isinstance(instance, MaxCutInstance):
        return {
            "type": "maxcut",
            "n": instance.n_vertices,
            "edges": [[i, j, w] for i, j, w in instance.edges],
            "seed": instance.seed,
        }
    if isinstance(instance, NumberPartitionInstance):
        return {"type": "numpart", "n": instance.n, "numbers": list(instance.numbers), "seed": instance.seed}
    if isinstance(instance, PortfolioInstance):
        return {
            "type": "portfolio",
            "n": instance.n,
            "returns": instance.returns.tolist(),
            "covariance": instance.covariance.tolist(),
            "risk": instance.risk,
            "budget": instance.budget,
            "penalty_weight": instance.penalty_weight,
            "seed": instance.seed,
        }
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def instance_from_dict(doc: dict):
    kind = doc.get("type")
    if kind == "maxcut":
        return MaxCutInstance(int(doc["n"]), tuple(tuple(e) for e in doc["edges"]), seed=doc.get("seed"))
    if kind == "numpart":
        inst = NumberPartitionInstance(tuple(doc["numbers"]), seed=doc.get("seed"))
        if "n" in doc and int(doc["n"]) != inst.n:
            raise ValueError(f"n={doc['n']} does not match {inst.n} numbers")
        return inst
    if kind == "portfolio":
        return PortfolioInstance(
            np.array(doc["returns"], dtype=float),
            np.array(doc["covariance"], dtype=float),
            float(doc["risk"]),
            int(doc["budget"]),
            doc.get("penalty_weight"),
            seed=doc.get("seed"),
        )
    raise ValueError(f"unknown instance type {kind!r}")


def dumps_instance(instance) -> str:
    # float repr is the shortest string that round-trips bit-exactly
    return json.dumps(instance_to_dict(instance), indent=1)


def loads_instance(text: str):
    return instance_from_dict(json.loads(text))
