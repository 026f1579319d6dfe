"""Gradient-free local minimisation (COBYLA) with exact evaluation accounting.

The trust-region iteration itself is scipy's COBYLA. This module adds what the
experiments need on top: a hard evaluation ceiling, a per-call trace, box
clipping and a loud failure on non-finite objective values.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .statevector import RandomSource

TWO_PI = 2.0 * math.pi


class NonFiniteObjectiveError(FloatingPointError):
    def __init__(self, params, value):
        self.params = np.array(params, copy=True)
        self.value = value
        super().__init__(f"objective returned {value!r} at params {self.params.tolist()}")


class StopOptimization(Exception):
    """Raised by an objective to end the run early; the result keeps the best point so far."""


class _BudgetExhausted(StopOptimization):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    max_evaluations: int = 1000
    rho_begin: float = 0.5
    rho_end: float = 1e-4
    bounds: Optional[Sequence[tuple]] = None

    def __post_init__(self):
        if not self.rho_end < self.rho_begin:
            raise ValueError("rho_end must be smaller than rho_begin")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be positive")

    @classmethod
    def for_dimension(cls, dim: int, multiplier: int = 66, **kwargs) -> OptimizerConfig:
        return cls(max_evaluations=multiplier * dim, **kwargs)


@dataclass
class OptimizationResult:
    best_params: np.ndarray
    best_value: float
    evaluations: int
    trace: list = field(default_factory=list)  # [(params_hash, value), ...]
    converged: bool = False
    message: str = ""


def params_hash(x) -> str:
    return hashlib.sha1(np.ascontiguousarray(x, dtype=np.float64).tobytes()).hexdigest()[:16]


def minimize(objective: Callable[[np.ndarray], float], x0, config: OptimizerConfig) -> OptimizationResult:
    """Minimise ``objective`` from ``x0`` within ``config.max_evaluations`` calls.

    Every call to ``objective`` lands in ``result.trace``. ``converged`` is true
    only when the trust radius shrank below ``rho_end``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1).copy()
    dim = x0.size
    if config.max_evaluations < dim + 2:
        raise ValueError(f"max_evaluations must be >= dimension + 2 = {dim + 2}")

    if config.bounds is not None:
        lo = np.array([b[0] for b in config.bounds], dtype=float)
        hi = np.array([b[1] for b in config.bounds], dtype=float)
        if lo.size != dim:
            raise ValueError("bounds length does not match x0")
        clip = lambda x: np.clip(x, lo, hi)  # noqa: E731
    else:
        clip = lambda x: x  # noqa: E731

    trace = []
    best = {"x": clip(x0).copy(), "f": math.inf}

    def wrapped(x):
        if len(trace) >= config.max_evaluations:
            raise _BudgetExhausted
        xc = np.array(clip(np.asarray(x, dtype=float)), copy=True)
        value = float(objective(xc))
        if not math.isfinite(value):
            raise NonFiniteObjectiveError(xc, value)
        trace.append((params_hash(xc), value))
        if value < best["f"]:
            best["x"], best["f"] = xc, value
        return value

    converged = False
    message = ""
    try:
        res = _scipy_minimize(
            wrapped,
            x0,
            method="COBYLA",
            options={"rhobeg": config.rho_begin, "tol": config.rho_end, "maxiter": config.max_evaluations},
        )
        converged = res.status == 1
        message = str(res.message)
    except _BudgetExhausted:
        message = "evaluation budget exhausted"
    except StopOptimization:
        message = "stopped by objective"

    return OptimizationResult(
        best_params=best["x"],
        best_value=best["f"],
        evaluations=len(trace),
        trace=trace,
        converged=converged,
        message=message,
    )


def random_initial_params(count: int, rng: RandomSource) -> np.ndarray:
    """``count`` angles uniform on ``[0, 2*pi)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return rng.generator.uniform(0.0, TWO_PI, size=count)
