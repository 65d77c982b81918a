"""Compare the numba and numpy simulator kernels.

Runs the noisy K1,4 circuit on the 5-qubit T topology and an exact-oracle
round (12 qubits) through both backends, checks the seeded outputs agree,
and prints wall-clock times.

    python benchmarks/bench_kernels.py [--shots 20000] [--repeats 3]
"""

import argparse
import math
import time

import numpy as np

from grovercut.circuit import topology_preset
from grovercut.graph import named_graph
from grovercut.grover import ExactLayout, build_exact_oracle, build_full_circuit
from grovercut.sim import kernels, noise_preset
from grovercut.sim.statevector import compile_circuit, run_noisy


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def bench_noisy(shots, repeats):
    gc = build_full_circuit(named_graph("k14"), 0.323 * math.pi, topology=topology_preset("t5"))
    noise = noise_preset("preset-a")
    results = {}
    for backend in kernels.IMPLEMENTATIONS:
        run_noisy(gc.circuit, noise, 1024, seed=0, backend=backend)  # warm up / compile
        t, counts = best_of(lambda: run_noisy(gc.circuit, noise, shots, seed=1, backend=backend), repeats)
        results[backend] = (t, counts)
    return results


def bench_batch(repeats, batch=256):
    g = named_graph("k14")
    layout = ExactLayout.for_graph(g, 4)
    prog = compile_circuit(build_exact_oracle(g, layout))
    rng = np.random.default_rng(0)
    init = rng.normal(size=(batch, 1 << prog.n_qubits)) + 1j * rng.normal(size=(batch, 1 << prog.n_qubits))
    results = {}
    for backend in kernels.IMPLEMENTATIONS:
        def go():
            st = init.copy()
            kernels.run_gates(st, prog.kinds, prog.q0, prog.q1, prog.mats, backend=backend)
            return st
        go()
        results[backend] = best_of(go, repeats)
    return results, len(prog.kinds), prog.n_qubits


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=20000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    print(f"default backend: {kernels.BACKEND}; available: {sorted(kernels.IMPLEMENTATIONS)}")

    noisy = bench_noisy(args.shots, args.repeats)
    print(f"\nnoisy trajectories, K1,4 on t5, {args.shots} shots")
    for name, (t, _) in noisy.items():
        print(f"  {name:6s} {t * 1e3:9.2f} ms  ({t / args.shots * 1e6:.2f} us/shot)")
    if len(noisy) == 2:
        same = noisy["numba"][1] == noisy["numpy"][1]
        print(f"  identical counts: {same}; speedup x{noisy['numpy'][0] / noisy['numba'][0]:.1f}")

    batch, n_gates, n_qubits = bench_batch(args.repeats)
    print(f"\nbatched gate program, exact oracle ({n_gates} gates, {n_qubits} qubits, 256 states)")
    for name, (t, _) in batch.items():
        print(f"  {name:6s} {t * 1e3:9.2f} ms")
    if len(batch) == 2:
        err = np.abs(batch["numba"][1] - batch["numpy"][1]).max()
        print(f"  max |difference|: {err:.2e}; speedup x{batch['numpy'][0] / batch['numba'][0]:.1f}")


if __name__ == "__main__":
    main()
