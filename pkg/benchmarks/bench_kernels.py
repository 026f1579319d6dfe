"""Numba vs numpy kernel timings.

Part 1 times each gate kernel from both kernel tables in-process. Part 2
runs an end-to-end HEA objective loop in two subprocesses, one per value of
ASCVAR_DISABLE_NUMBA, so the module-level dispatch is exercised as users see it.

    python3 benchmarks/bench_kernels.py [--qubits 10 14 18] [--repeat 20]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ascvar import kernels

E2E = """
import time, numpy as np
from ascvar import HardwareEfficientAnsatz, ObjectiveSpec, RandomSource
from ascvar._jit import backend_name
from ascvar.objective import evaluate
from ascvar.problems import generate_maxcut_instance, maxcut_hamiltonian
n = {n}
h = maxcut_hamiltonian(generate_maxcut_instance(n, rng=RandomSource(0)))
a = HardwareEfficientAnsatz(n, 1)
rng = RandomSource(1)
x = rng.generator.uniform(0, 6.28, a.param_count)
evaluate(ObjectiveSpec(0.1), a.prepare(x), h, rng)
t = time.perf_counter()
for _ in range({reps}):
    evaluate(ObjectiveSpec(0.1), a.prepare(x), h, rng)
print(backend_name(), (time.perf_counter() - t) / {reps})
"""


def kernel_args(name, n, psi):
    return {
        "ry": (n // 2, 0.37),
        "h": (n - 1,),
        "cz": (0, n - 1),
        "mixer": (n, 0.41),
        "phase": (np.linspace(-1, 1, psi.size), 0.7),
        "ry_layer": (np.linspace(0.1, 1.0, n),),
        "scale_real": (np.where(np.arange(psi.size) % 3, 1.0, -1.0),),
    }[name]


def bench_kernels(qubits, repeat):
    if not kernels.NUMBA_KERNELS:
        print("numba unavailable; only numpy kernels exist")
        return
    print(f"{'kernel':<11}{'n':>4}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for n in qubits:
        g = np.random.default_rng(n)
        base = (g.standard_normal(1 << n) + 1j * g.standard_normal(1 << n)) / np.sqrt(2 << n)
        for name in kernels.NUMPY_KERNELS:
            args = kernel_args(name, n, base)
            times = {}
            for label, table in (("numpy", kernels.NUMPY_KERNELS), ("numba", kernels.NUMBA_KERNELS)):
                psi = base.copy()
                fn = table[name]
                fn(psi, *args)  # compile / warm up
                times[label] = min(timeit.repeat(lambda: fn(psi, *args), number=1, repeat=repeat)) * 1e3
            print(f"{name:<11}{n:>4}{times['numpy']:>12.3f}{times['numba']:>12.3f}{times['numpy'] / times['numba']:>9.1f}x")


def bench_end_to_end(qubits, reps=20):
    print("\nend-to-end HEA prepare + sampled CVaR (alpha=0.1, K=1000), seconds per evaluation")
    for n in qubits:
        cells = []
        for flag in ("1", "0"):
            env = {**os.environ, "ASCVAR_DISABLE_NUMBA": flag}
            out = subprocess.run([sys.executable, "-c", E2E.format(n=n, reps=reps)], env=env,
                                 capture_output=True, text=True, check=True)
            backend, secs = out.stdout.split()
            cells.append(f"{backend} {float(secs) * 1e3:8.2f} ms")
        print(f"n={n:<3} " + "   ".join(cells))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--qubits", type=int, nargs="+", default=[10, 14, 18])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--skip-e2e", action="store_true")
    args = p.parse_args(argv)
    bench_kernels(args.qubits, args.repeat)
    if not args.skip_e2e:
        bench_end_to_end(args.qubits)


if __name__ == "__main__":
    main()
