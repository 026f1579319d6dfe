"""Brute-force ground truth and the evaluation metrics built on it."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .problems import DiagonalHamiltonian
from .statevector import StateVector, probabilities

SUCCESS_THRESHOLD = 0.10
TRACE_HEADER = ("t", "alpha", "objective", "overlap", "cumulative_shots")


class UndefinedRatioError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    ground_energy: float
    optimal_indices: tuple

    def __post_init__(self):
        if not self.optimal_indices:
            raise ValueError("ground truth needs at least one optimal index")
        object.__setattr__(self, "optimal_indices", tuple(int(i) for i in self.optimal_indices))

    @property
    def degeneracy(self) -> int:
        return len(self.optimal_indices)

    def to_dict(self) -> dict:
        return {
            "ground_energy": self.ground_energy,
            "degeneracy": self.degeneracy,
            "optimal_indices": list(self.optimal_indices),
        }


def brute_force_ground(hamiltonian: DiagonalHamiltonian, tie_tolerance: float = 0.0) -> GroundTruth:
    e = hamiltonian.energies
    ground = float(e.min())
    idx = np.flatnonzero(e <= ground + tie_tolerance)
    return GroundTruth(ground, tuple(idx.tolist()))


def overlap_from_probabilities(p: np.ndarray, truth: GroundTruth) -> float:
    return float(min(1.0, p[list(truth.optimal_indices)].sum()))


def overlap(state: StateVector, truth: GroundTruth) -> float:
    """Total probability on the optimal basis states."""
    if max(truth.optimal_indices) >= state.dim:
        raise ValueError("ground truth refers to basis states outside this register")
    return overlap_from_probabilities(probabilities(state), truth)


def is_success(overlap_value: float, threshold: float = SUCCESS_THRESHOLD) -> bool:
    return overlap_value >= threshold


def normalized_iterations(evaluations: int, param_count: int) -> float:
    if param_count < 1:
        raise ValueError("param_count must be >= 1")
    return evaluations / param_count


def approximation_ratio(expectation: float, truth: GroundTruth) -> float:
    """``expectation / ground_energy`` for minimisation-form Hamiltonians."""
    if truth.ground_energy == 0:
        raise UndefinedRatioError("approximation ratio undefined for a zero optimum")
    return expectation / truth.ground_energy


@dataclass
class RunTrace:
    """One row per objective evaluation."""

    t: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    overlap: list = field(default_factory=list)
    cumulative_shots: list = field(default_factory=list)

    def append(self, alpha: float, objective: float, overlap_value: float, shots: int) -> None:
        prev = self.cumulative_shots[-1] if self.cumulative_shots else 0
        self.t.append(len(self.t))
        self.alpha.append(float(alpha))
        self.objective.append(float(objective))
        self.overlap.append(float(overlap_value))
        self.cumulative_shots.append(prev + int(shots))

    def __len__(self):
        return len(self.t)

    @property
    def final_overlap(self) -> float:
        return self.overlap[-1] if self.overlap else 0.0

    def rows(self):
        return zip(self.t, self.alpha, self.objective, self.overlap, self.cumulative_shots)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t, a, o, ov, s in self.rows():
            w.writerow((t, fmt_float(a), fmt_float(o), fmt_float(ov), s))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> RunTrace:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != TRACE_HEADER:
            raise ValueError(f"trace CSV must start with header {','.join(TRACE_HEADER)}")
        tr = cls()
        for t, a, o, ov, s in rows[1:]:
            tr.t.append(int(t))
            tr.alpha.append(float(a))
            tr.objective.append(float(o))
            tr.overlap.append(float(ov))
            tr.cumulative_shots.append(int(s))
        return tr


def fmt_float(x: float) -> str:
    return repr(float(x))


def iterations_to_threshold(trace: RunTrace, threshold: float, param_count: int) -> Optional[float]:
    """Normalised iterations at the first record with overlap >= threshold, else None."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    for t, ov in zip(trace.t, trace.overlap):
        if ov >= threshold:
            return normalized_iterations(t, param_count)
    return None


@dataclass(frozen=True)
class RunRecord:
    method: str
    trace: RunTrace
    truth: GroundTruth
    param_count: int


@dataclass(frozen=True)
class SummaryRow:
    method: str
    runs: int
    successful_instances: int
    average_overlap: float  # percent, over all runs
    average_overlap_successful: Optional[float]  # percent, successful runs only
    average_normalized_iterations: Optional[float]  # successful runs only


def summarize(runs: Iterable[RunRecord], threshold: float = SUCCESS_THRESHOLD) -> list:
    """One :class:`SummaryRow` per method, in first-seen method order."""
    runs = list(runs)
    if not runs:
        raise ValueError("nothing to summarise")
    by_method = {}
    for r in runs:
        by_method.setdefault(r.method, []).append(r)
    rows = []
    for method, group in by_method.items():
        finals = [r.trace.final_overlap for r in group]
        ok = [r for r, f in zip(group, finals) if is_success(f, threshold)]
        iters = [iterations_to_threshold(r.trace, threshold, r.param_count) for r in ok]
        iters = [v for v in iters if v is not None]
        rows.append(
            SummaryRow(
                method=method,
                runs=len(group),
                successful_instances=len(ok),
                average_overlap=100.0 * float(np.mean(finals)),
                average_overlap_successful=100.0 * float(np.mean([r.trace.final_overlap for r in ok])) if ok else None,
                average_normalized_iterations=float(np.mean(iters)) if iters else None,
            )
        )
    return rows


SUMMARY_HEADER = ("method", "runs", "successful", "avg_overlap_pct", "avg_overlap_successful_pct", "avg_norm_iters")


def summary_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    opt = lambda v: "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.4f}"  # noqa: E731
    for r in rows:
        w.writerow(
            (
                r.method,
                r.runs,
                r.successful_instances,
                f"{r.average_overlap:.4f}",
                opt(r.average_overlap_successful),
                opt(r.average_normalized_iterations),
            )
        )
    return buf.getvalue()
