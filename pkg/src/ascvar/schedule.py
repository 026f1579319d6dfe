"""Ascending-alpha schedules and the staged Ascending-CVaR driver."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .metrics import GroundTruth, RunTrace, overlap_from_probabilities
from .objective import ObjectiveSpec, evaluate
from .optimizer import OptimizationResult, OptimizerConfig, StopOptimization, minimize
from .statevector import RandomSource, probabilities

KINDS = ("constant", "linear", "sigmoid", "exponential", "logarithmic")
SIGMOID_STOP = 0.999
_ROUND = 12


@dataclass(frozen=True)
class AscendingSchedule:
    """How alpha moves between stages.

    ``lam`` is the ascending factor (the ``lambda`` config key): the per-stage
    increment for ``linear``, the logistic slope for ``sigmoid``. The
    exponential and logarithmic kinds reuse the stage count of the linear
    schedule with the same ``lam``. ``constant`` runs one stage at ``alpha0``.
    """

    kind: str = "linear"
    lam: float = 0.035
    alpha0: float = 0.01
    alpha_cap: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"schedule kind must be one of {KINDS}, got {self.kind!r}")
        if not 0.0 < self.alpha0 <= self.alpha_cap <= 1.0:
            raise ValueError("need 0 < alpha0 <= alpha_cap <= 1")
        if self.kind != "constant" and self.lam <= 0:
            raise ValueError("ascending factor must be > 0")

    @classmethod
    def constant(cls, alpha: float) -> AscendingSchedule:
        return cls(kind="constant", lam=0.0, alpha0=alpha, alpha_cap=max(alpha, 1.0))

    @classmethod
    def from_dict(cls, doc: dict) -> AscendingSchedule:
        kind = doc.get("kind", "linear")
        if kind == "constant":
            return cls.constant(float(doc.get("alpha", doc.get("alpha0", 1.0))))
        return cls(
            kind=kind,
            lam=float(doc.get("lambda", doc.get("lam", 0.035))),
            alpha0=float(doc.get("alpha0", 0.01)),
            alpha_cap=float(doc.get("alpha_cap", 1.0)),
        )

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "alpha": self.alpha0}
        return {"kind": self.kind, "lambda": self.lam, "alpha0": self.alpha0, "alpha_cap": self.alpha_cap}


def _linear(a0, lam, cap):
    seq = []
    k = 0
    while True:
        a = round(a0 + k * lam, _ROUND)
        if a >= cap - 1e-9:
            break
        seq.append(a)
        k += 1
    seq.append(cap)
    return seq


def alpha_sequence(schedule: AscendingSchedule) -> list:
    """Ordered stage alphas; strictly increasing and ending exactly at ``alpha_cap``."""
    a0, lam, cap = schedule.alpha0, schedule.lam, schedule.alpha_cap
    if schedule.kind == "constant":
        return [a0]
    if a0 >= cap:
        return [cap]
    if schedule.kind == "linear":
        return _linear(a0, lam, cap)
    if schedule.kind == "sigmoid":
        stop = min(cap, SIGMOID_STOP)
        seq = [max(a0, 1.0 / (1.0 + math.exp(5.0)))]
        t = 1
        while True:
            a = round(1.0 / (1.0 + math.exp(5.0 - lam * t)), _ROUND)
            if a >= stop:
                break
            # early logistic values can sit below alpha0; skip until it climbs past
            if a > seq[-1]:
                seq.append(a)
            t += 1
        if seq[-1] >= cap:
            seq = [a for a in seq if a < cap]
        seq.append(cap)
        return seq
    steps = len(_linear(a0, lam, cap)) - 1
    if schedule.kind == "exponential":
        r = (cap / a0) ** (1.0 / steps)
        seq = [round(a0 * r**t, _ROUND) for t in range(steps)]
    else:
        seq = [round(a0 + (cap - a0) * math.log1p(t) / math.log1p(steps), _ROUND) for t in range(steps)]
    seq.append(cap)
    return seq


@dataclass
class StageResult:
    alpha: float
    best_params: np.ndarray
    best_value: float
    evaluations: int
    cumulative_shots: int
    first_params_hash: str = ""


@dataclass
class AscendingResult:
    final_params: np.ndarray
    trace: RunTrace
    stages: list = field(default_factory=list)
    truncated: bool = False

    def __iter__(self):
        # allows ``params, trace, stages = run_ascending_cvar(...)``
        return iter((self.final_params, self.trace, self.stages))


def make_objective(ansatz, hamiltonian, spec: ObjectiveSpec, rng: RandomSource, trace: RunTrace,
                   truth: Optional[GroundTruth] = None):
    """Objective closure that prepares, measures and logs one row per call."""

    def objective(params):
        state = ansatz.prepare(params)
        value, shots = evaluate(spec, state, hamiltonian, rng)
        ov = overlap_from_probabilities(probabilities(state), truth) if truth is not None else math.nan
        trace.append(spec.alpha, value, ov, shots)
        return value

    return objective


def stopping_condition(trace: RunTrace, threshold_overlap: Optional[float] = None,
                       budget: Optional[int] = None, alpha_cap: float = 1.0) -> bool:
    """Budget exhausted, or (threshold mode) overlap reached once alpha hit its cap."""
    if not len(trace):
        raise ValueError("empty trace")
    if budget is not None and len(trace) >= budget:
        return True
    if threshold_overlap is None:
        return False
    return trace.overlap[-1] >= threshold_overlap and trace.alpha[-1] >= alpha_cap - 1e-12


def stage_budgets(total: int, n_stages: int) -> list:
    """Even split with the remainder going to the last stage."""
    per = total // n_stages
    return [per] * (n_stages - 1) + [total - per * (n_stages - 1)]


def run_ascending_cvar(
    ansatz,
    hamiltonian,
    schedule: AscendingSchedule,
    objective_spec: ObjectiveSpec,
    optimizer_config: OptimizerConfig,
    initial_params,
    rng: RandomSource,
    truth: Optional[GroundTruth] = None,
    threshold_overlap: Optional[float] = None,
    reset_between_stages: bool = True,
) -> AscendingResult:
    """Minimise CVaR at each alpha of ``schedule`` in turn, warm-starting every stage.

    ``optimizer_config.max_evaluations`` is the budget for the whole run,
    split evenly over stages. With ``reset_between_stages`` each stage is a
    fresh optimiser started at the previous stage's best point. Without it a
    single optimiser runs throughout and alpha switches underneath it at the
    stage boundaries.
    """
    x = np.asarray(initial_params, dtype=float).reshape(-1).copy()
    if x.size != ansatz.param_count:
        raise ValueError(f"initial_params has {x.size} entries, ansatz needs {ansatz.param_count}")
    alphas = alpha_sequence(schedule)
    budget = optimizer_config.max_evaluations
    dim = x.size
    trace = RunTrace()
    if reset_between_stages:
        return _run_staged(ansatz, hamiltonian, alphas, objective_spec, optimizer_config, x, rng, truth,
                           threshold_overlap, trace, budget, dim, schedule.alpha_cap)
    return _run_continuous(ansatz, hamiltonian, alphas, objective_spec, optimizer_config, x, rng, truth,
                           threshold_overlap, trace, budget, dim, schedule.alpha_cap)


def _run_staged(ansatz, hamiltonian, alphas, spec, config, x, rng, truth, threshold, trace, budget, dim, cap):
    stages = []
    truncated = False
    budgets = stage_budgets(budget, len(alphas))
    for alpha, stage_budget in zip(alphas, budgets):
        stage_budget = min(stage_budget, budget - len(trace))
        if stage_budget < dim + 2:
            truncated = True
            break
        before = len(trace)
        cfg = dataclasses.replace(config, max_evaluations=stage_budget)
        objective = make_objective(ansatz, hamiltonian, spec.with_alpha(alpha), rng, trace, truth)
        res: OptimizationResult = minimize(objective, x, cfg)
        stages.append(
            StageResult(
                alpha=alpha,
                best_params=res.best_params,
                best_value=res.best_value,
                evaluations=len(trace) - before,
                cumulative_shots=trace.cumulative_shots[-1],
                first_params_hash=res.trace[0][0],
            )
        )
        x = res.best_params
        if stopping_condition(trace, threshold, budget, cap):
            break
    if not stages:
        truncated = True
    return AscendingResult(final_params=x, trace=trace, stages=stages, truncated=truncated)


def _run_continuous(ansatz, hamiltonian, alphas, spec, config, x, rng, truth, threshold, trace, budget, dim, cap):
    bounds = np.cumsum(stage_budgets(budget, len(alphas)))
    objectives = [make_objective(ansatz, hamiltonian, spec.with_alpha(a), rng, trace, truth) for a in alphas]
    best = [[None, math.inf, 0] for _ in alphas]  # params, value, evaluations
    stop = {"flag": False}

    def current_stage():
        return min(int(np.searchsorted(bounds, len(trace), side="right")), len(alphas) - 1)

    def objective(params):
        if stop["flag"]:
            raise StopOptimization
        s = current_stage()
        value = objectives[s](params)
        slot = best[s]
        slot[2] += 1
        if value < slot[1]:
            slot[0], slot[1] = np.array(params, copy=True), value
        if stopping_condition(trace, threshold, budget, cap):
            stop["flag"] = True
        return value

    while len(trace) < budget and not stop["flag"]:
        remaining = budget - len(trace)
        if remaining < dim + 2:
            break
        cfg = dataclasses.replace(config, max_evaluations=remaining)
        res = minimize(objective, x, cfg)
        s = current_stage()
        x = best[s][0] if best[s][0] is not None else res.best_params
        # a converged optimiser restarts only while later stages remain
        if stop["flag"] or not res.converged or s == len(alphas) - 1:
            break

    stages = []
    for alpha, (params, value, n_eval), end in zip(alphas, best, bounds):
        if params is None:
            continue
        stages.append(StageResult(alpha=alpha, best_params=params, best_value=value, evaluations=n_eval,
                                  cumulative_shots=trace.cumulative_shots[min(int(end), len(trace)) - 1]))
    final = stages[-1].best_params if stages else x
    return AscendingResult(final_params=final, trace=trace, stages=stages, truncated=not stages)
