"""Experiment runner: instance suites x methods -> traces, ground truths, summaries.

Output tree of :func:`run_experiment`::

    <out>/manifest.json
    <out>/instances/<iid>.json
    <out>/ground_truth/<iid>.json
    <out>/traces/<iid>__<method>.csv      t,alpha,objective,overlap,cumulative_shots
    <out>/summary_<family>.csv

Every numeric output is a pure function of the spec and its master seed.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._jit import backend_name
from .ansatz import HardwareEfficientAnsatz, QaoaAnsatz, qaoa_gamma_bound
from .metrics import (
    SUCCESS_THRESHOLD,
    GroundTruth,
    RunRecord,
    RunTrace,
    brute_force_ground,
    fmt_float,
    normalized_iterations,
    overlap_from_probabilities,
    summarize,
    summary_to_csv,
)
from .objective import ObjectiveSpec, exact_cvar_from_probabilities
from .optimizer import OptimizerConfig, random_initial_params
from .problems import (
    NumberPartitionInstance,
    dumps_instance,
    generate_maxcut_instance,
    generate_numpart_instance,
    generate_portfolio_instance,
    hamiltonian_for,
    instance_to_dict,
    loads_instance,
    tie_tolerance_for,
)
from .schedule import AscendingSchedule, run_ascending_cvar
from .statevector import RandomSource, probabilities

log = logging.getLogger(__name__)

FAMILIES = ("maxcut", "numpart", "portfolio")
OUTPUT_DIR_ENV = "ASCVAR_OUTPUT_DIR"

DEFAULT_METHODS = (
    {"label": "alpha_t-linear", "schedule": {"kind": "linear", "lambda": 0.035, "alpha0": 0.01}},
    {"label": "alpha_t-sigmoid", "schedule": {"kind": "sigmoid", "lambda": 0.35, "alpha0": 0.01}},
    {"label": "alpha=0.1", "schedule": {"kind": "constant", "alpha": 0.1}},
    {"label": "alpha=0.2", "schedule": {"kind": "constant", "alpha": 0.2}},
    {"label": "alpha=0.5", "schedule": {"kind": "constant", "alpha": 0.5}},
    {"label": "alpha=1", "schedule": {"kind": "constant", "alpha": 1.0}},
)

DEFAULT_GENERATION = {
    "maxcut": {"graph_family": "random-nonregular", "param": 0.5},
    "numpart": {"bound": 500},
    "portfolio": {"q": 0.5},
}


class SpecError(ValueError):
    """Experiment spec failed validation."""


@dataclass(frozen=True)
class Method:
    label: str
    schedule: AscendingSchedule

    @classmethod
    def from_dict(cls, doc: dict) -> Method:
        sched = AscendingSchedule.from_dict(doc.get("schedule", doc))
        label = doc.get("label") or (
            f"alpha={sched.alpha0:g}" if sched.kind == "constant" else f"alpha_t-{sched.kind}"
        )
        if not re.fullmatch(r"[A-Za-z0-9_.=+-]+", label):
            raise SpecError(f"method label {label!r} must be file-name safe")
        return cls(label, sched)


@dataclass(frozen=True)
class ExperimentSpec:
    family: str
    instance_count: int = 20
    qubit_range: tuple = (10, 12)
    generation: dict = field(default_factory=dict)
    ansatz: str = "hea"
    layers: int = 1
    methods: tuple = ()
    base_shots: int = 1000
    budget_multiplier: int = 66
    success_threshold: float = SUCCESS_THRESHOLD
    mode: str = "sampled"
    master_seed: int = 2022
    output_dir: str = "ascvar-out"
    reset_between_stages: bool = True
    threshold_stop: bool = False
    rho_begin: float = 0.5
    rho_end: float = 1e-4
    workers: int = 1
    instances: tuple = ()  # explicit instance documents; overrides generation

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentSpec:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known - {"ansatz_layers"}
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        family = doc.get("family")
        if family not in FAMILIES:
            raise SpecError(f"family must be one of {FAMILIES}, got {family!r}")
        kw = dict(doc)
        ans = kw.pop("ansatz", "hea")
        if isinstance(ans, dict):
            kw["layers"] = int(ans.get("layers", ans.get("p", 1)))
            ans = ans.get("kind", "hea")
        kw["ansatz"] = ans
        try:
            kw["methods"] = tuple(Method.from_dict(m) for m in doc.get("methods", DEFAULT_METHODS))
            kw["qubit_range"] = tuple(int(v) for v in doc.get("qubit_range", (10, 12)))
            kw["generation"] = {**DEFAULT_GENERATION[family], **doc.get("generation", {})}
            kw["instances"] = tuple(doc.get("instances", ()))
            spec = cls(**kw)
        except (TypeError, ValueError) as exc:
            raise SpecError(str(exc)) from exc
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> ExperimentSpec:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read spec {path}: {exc}") from exc
        return cls.from_dict(doc)

    def validate(self):
        lo, hi = self.qubit_range
        if not 2 <= lo <= hi <= 24:
            raise SpecError(f"qubit_range must satisfy 2 <= lo <= hi <= 24, got {self.qubit_range}")
        if self.instance_count < 1 and not self.instances:
            raise SpecError("instance_count must be >= 1")
        if self.ansatz not in ("hea", "qaoa"):
            raise SpecError(f"ansatz must be 'hea' or 'qaoa', got {self.ansatz!r}")
        if self.layers < 1:
            raise SpecError("layers must be >= 1")
        if not self.methods:
            raise SpecError("at least one method is required")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise SpecError(f"duplicate method labels: {labels}")
        if self.mode not in ("sampled", "exact"):
            raise SpecError("mode must be 'sampled' or 'exact'")
        if self.base_shots < 1 or self.budget_multiplier < 1 or self.workers < 1:
            raise SpecError("base_shots, budget_multiplier and workers must be positive")
        if not 0 < self.success_threshold <= 1:
            raise SpecError("success_threshold must lie in (0, 1]")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = [{"label": m.label, "schedule": m.schedule.to_dict()} for m in self.methods]
        d["qubit_range"] = list(self.qubit_range)
        d["instances"] = list(self.instances)
        return d


# --------------------------------------------------------------------------
# instance suites
# --------------------------------------------------------------------------


def generate_instance(family: str, n: int, generation: dict, rng: RandomSource):
    if family == "maxcut":
        return generate_maxcut_instance(n, generation["graph_family"], generation["param"], rng)
    if family == "numpart":
        return generate_numpart_instance(n, int(generation["bound"]), rng)
    if family == "portfolio":
        extra = {k: generation[k] for k in ("factors", "factor_scale", "jitter", "penalty_weight") if k in generation}
        return generate_portfolio_instance(n, float(generation["q"]), rng, **extra)
    raise SpecError(f"unknown family {family!r}")


def build_suite(spec: ExperimentSpec) -> list:
    """``[(instance_id, instance), ...]``; sizes cycle through ``qubit_range``."""
    if spec.instances:
        return [(f"inst{i:03d}", loads_instance(json.dumps(d))) for i, d in enumerate(spec.instances)]
    root = RandomSource(spec.master_seed)
    lo, hi = spec.qubit_range
    suite = []
    for i in range(spec.instance_count):
        n = lo + i % (hi - lo + 1)
        iid = f"inst{i:03d}"
        suite.append((iid, generate_instance(spec.family, n, spec.generation, root.derive("instance", iid))))
    return suite


def make_ansatz(kind: str, layers: int, n: int, hamiltonian):
    if kind == "hea":
        return HardwareEfficientAnsatz(n, layers)
    return QaoaAnsatz(hamiltonian, layers)


def parameter_box(kind: str, layers: int, instance) -> Optional[list]:
    """QAOA on number partitioning keeps gamma inside its period and beta in [0, pi]."""
    if kind == "qaoa" and isinstance(instance, NumberPartitionInstance):
        return [(0.0, qaoa_gamma_bound(instance)), (0.0, math.pi)] * layers
    return None


def initial_params(count: int, rng: RandomSource, box: Optional[list]) -> np.ndarray:
    x = random_initial_params(count, rng)
    if box is not None:
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        x = lo + (hi - lo) * x / (2.0 * math.pi)
    return x


def digest(obj) -> str:
    if isinstance(obj, np.ndarray):
        data = np.ascontiguousarray(obj, dtype=np.float64).tobytes()
    else:
        data = json.dumps(obj, sort_keys=True).encode()
    return hashlib.sha256(data).hexdigest()[:16]


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------


@dataclass
class RunOutcome:
    iid: str
    method: str
    trace_file: str
    param_count: int
    evaluations: int
    final_overlap: float
    truncated: bool
    instance_hash: str
    init_params_hash: str
    error: Optional[str] = None


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _prepare_instance(spec: ExperimentSpec, iid: str, instance):
    h = hamiltonian_for(instance)
    truth = brute_force_ground(h, tie_tolerance_for(instance, h))
    ansatz = make_ansatz(spec.ansatz, spec.layers, instance.n, h)
    box = parameter_box(spec.ansatz, spec.layers, instance)
    # one draw per instance, shared by every method
    x0 = initial_params(ansatz.param_count, RandomSource(spec.master_seed).derive("init", iid), box)
    return h, truth, ansatz, box, x0


def _run_one(spec: ExperimentSpec, iid: str, instance, method: Method, out: Path) -> RunOutcome:
    h, truth, ansatz, box, x0 = _prepare_instance(spec, iid, instance)
    dim = ansatz.param_count
    rho = spec.rho_begin
    if box is not None:
        rho = min(rho, 0.25 * min(b[1] - b[0] for b in box))
    config = OptimizerConfig(
        max_evaluations=spec.budget_multiplier * dim,
        rho_begin=rho,
        rho_end=min(spec.rho_end, 0.5 * rho),
        bounds=box,
    )
    rng = RandomSource(spec.master_seed).derive("run", iid, method.label)
    trace_file = f"traces/{iid}__{method.label}.csv"
    inst_hash = digest(instance_to_dict(instance))
    x0_hash = digest(x0)
    try:
        result = run_ascending_cvar(
            ansatz,
            h,
            method.schedule,
            ObjectiveSpec(1.0, spec.base_shots, spec.mode),
            config,
            x0,
            rng,
            truth=truth,
            threshold_overlap=spec.success_threshold if spec.threshold_stop else None,
            reset_between_stages=spec.reset_between_stages,
        )
    except Exception as exc:  # keep the rest of the suite running
        log.exception("run %s / %s failed", iid, method.label)
        return RunOutcome(iid, method.label, "", dim, 0, 0.0, True, inst_hash, x0_hash, error=repr(exc))
    _atomic_write(out / trace_file, result.trace.to_csv())
    return RunOutcome(
        iid,
        method.label,
        trace_file,
        dim,
        len(result.trace),
        result.trace.final_overlap,
        result.truncated,
        inst_hash,
        x0_hash,
    )


@dataclass
class ExperimentResult:
    output_dir: Path
    summary: list
    outcomes: list

    @property
    def failed(self) -> list:
        return [o for o in self.outcomes if o.error]

    def summary_row(self, method: str):
        return next(r for r in self.summary if r.method == method)


def _task(args):
    return _run_one(*args)


def run_experiment(spec: ExperimentSpec, output_dir=None) -> ExperimentResult:
    """Run every (instance, method) pair and write the output tree."""
    out = Path(output_dir or os.environ.get(OUTPUT_DIR_ENV) or spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    suite = build_suite(spec)
    log.info("running %d instances x %d methods (%s kernels)", len(suite), len(spec.methods), backend_name())

    for iid, inst in suite:
        _, truth, ansatz, _, x0 = _prepare_instance(spec, iid, inst)
        _atomic_write(out / "instances" / f"{iid}.json", dumps_instance(inst) + "\n")
        doc = {
            **truth.to_dict(),
            "instance": iid,
            "instance_hash": digest(instance_to_dict(inst)),
            "param_count": ansatz.param_count,
            "initial_params": [fmt_float(v) for v in x0],
            "initial_params_hash": digest(x0),
        }
        _atomic_write(out / "ground_truth" / f"{iid}.json", json.dumps(doc, indent=1) + "\n")

    tasks = [(spec, iid, inst, m, out) for iid, inst in suite for m in spec.methods]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(_task, tasks))
    else:
        outcomes = [_task(t) for t in tasks]

    truths = {}
    records = []
    for o in outcomes:
        if o.error:
            continue
        if o.iid not in truths:
            truths[o.iid] = json.loads((out / "ground_truth" / f"{o.iid}.json").read_text())
        g = truths[o.iid]
        trace = RunTrace.from_csv((out / o.trace_file).read_text())
        truth = GroundTruth(g["ground_energy"], tuple(g["optimal_indices"]))
        records.append(RunRecord(o.method, trace, truth, o.param_count))
    summary = summarize(records, spec.success_threshold) if records else []
    if summary:
        _atomic_write(out / f"summary_{spec.family}.csv", summary_to_csv(summary))

    manifest = {
        "spec": spec.to_dict(),
        "runs": [
            {
                **dataclasses.asdict(o),
                "final_overlap": fmt_float(o.final_overlap),
            }
            for o in outcomes
        ],
    }
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=1) + "\n")
    return ExperimentResult(out, summary, outcomes)


# --------------------------------------------------------------------------
# landscapes and plot data
# --------------------------------------------------------------------------


@dataclass
class LandscapeGrid:
    alpha: float
    gammas: np.ndarray
    betas: np.ndarray
    values: np.ndarray  # values[i, j] at (gammas[i], betas[j])
    ground_mass: np.ndarray

    @property
    def minimum(self) -> float:
        return float(self.values.min())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("gamma", "beta", "cvar"))
        for i, g in enumerate(self.gammas):
            for j, b in enumerate(self.betas):
                w.writerow((fmt_float(g), fmt_float(b), fmt_float(self.values[i, j])))
        return buf.getvalue()


def landscape_box(instance) -> tuple:
    g_hi = qaoa_gamma_bound(instance) if isinstance(instance, NumberPartitionInstance) else 2.0 * math.pi
    return (0.0, g_hi), (0.0, math.pi)


def compute_landscapes(instance, alphas, resolution: int = 50, layers: int = 1) -> list:
    """Exact CVaR over a half-open (gamma, beta) grid for depth-1 QAOA."""
    if layers != 1:
        raise ValueError("landscapes are defined for depth-1 QAOA only")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    h = hamiltonian_for(instance)
    truth = brute_force_ground(h, tie_tolerance_for(instance, h))
    ansatz = QaoaAnsatz(h, 1)
    (g0, g1), (b0, b1) = landscape_box(instance)
    gammas = np.linspace(g0, g1, resolution, endpoint=False)
    betas = np.linspace(b0, b1, resolution, endpoint=False)
    values = np.empty((len(alphas), resolution, resolution))
    mass = np.empty((resolution, resolution))
    for i, g in enumerate(gammas):
        for j, b in enumerate(betas):
            p = probabilities(ansatz.prepare([g, b]))
            mass[i, j] = overlap_from_probabilities(p, truth)
            for k, a in enumerate(alphas):
                values[k, i, j] = exact_cvar_from_probabilities(p, h, a)
    return [LandscapeGrid(float(a), gammas, betas, values[k], mass) for k, a in enumerate(alphas)]


def emit_landscape(instance, alphas, resolution: int, out_dir, layers: int = 1) -> dict:
    """Write one CSV per alpha plus ``landscape.json`` with minima and reachability."""
    out = Path(out_dir)
    grids = compute_landscapes(instance, alphas, resolution, layers)
    h = hamiltonian_for(instance)
    ground = float(h.energies.min())
    files = []
    for grid in grids:
        name = f"landscape_alpha={grid.alpha:g}.csv"
        _atomic_write(out / name, grid.to_csv())
        files.append(name)
    reach = float(grids[0].ground_mass.max())
    report = {
        "ground_energy": ground,
        "resolution": resolution,
        "max_ground_mass_on_grid": reach,
        "grids": [
            {
                "alpha": g.alpha,
                "file": f,
                "minimum": g.minimum,
                "argmin": [float(g.gammas[i]) for i in [np.unravel_index(g.values.argmin(), g.values.shape)[0]]]
                + [float(g.betas[np.unravel_index(g.values.argmin(), g.values.shape)[1]])],
                "reaches_ground": bool(g.alpha <= reach),
            }
            for g, f in zip(grids, files)
        ],
    }
    _atomic_write(out / "landscape.json", json.dumps(report, indent=1) + "\n")
    return {"grids": grids, "report": report}


def emit_plot_data(run_dir) -> list:
    """Per trace: ``<stem>__norm.csv`` and ``<stem>__shots.csv`` under ``curves/``."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json in {run_dir}")
    runs = [r for r in json.loads(manifest_path.read_text())["runs"] if not r.get("error")]
    if not runs:
        raise FileNotFoundError(f"no traces recorded in {run_dir}")
    written = []
    for r in runs:
        path = run_dir / r["trace_file"]
        if not path.exists():
            raise FileNotFoundError(f"missing trace {path}")
        trace = RunTrace.from_csv(path.read_text())
        stem = Path(r["trace_file"]).stem
        norm = io.StringIO()
        w = csv.writer(norm, lineterminator="\n")
        w.writerow(("normalized_iteration", "overlap"))
        for t, ov in zip(trace.t, trace.overlap):
            w.writerow((fmt_float(normalized_iterations(t, r["param_count"])), fmt_float(ov)))
        shots = io.StringIO()
        w = csv.writer(shots, lineterminator="\n")
        w.writerow(("cumulative_shots", "overlap"))
        for s, ov in zip(trace.cumulative_shots, trace.overlap):
            w.writerow((s, fmt_float(ov)))
        for suffix, buf in (("norm", norm), ("shots", shots)):
            p = run_dir / "curves" / f"{stem}__{suffix}.csv"
            _atomic_write(p, buf.getvalue())
            written.append(p)
    return written


def generate_instances(family: str, count: int, sizes, seed: int, out_dir, generation: Optional[dict] = None) -> list:
    gen = {**DEFAULT_GENERATION[family], **(generation or {})}
    root = RandomSource(seed)
    out = Path(out_dir)
    paths = []
    for i in range(count):
        n = sizes[i % len(sizes)]
        inst = generate_instance(family, n, gen, root.derive("instance", f"inst{i:03d}"))
        p = out / f"{family}_{i:03d}.json"
        _atomic_write(p, dumps_instance(inst) + "\n")
        paths.append(p)
    return paths
