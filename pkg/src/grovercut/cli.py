"""Command-line experiment runner.

Every command prints its JSON result and, with ``--out``, also writes it
together with CSV tables. The only non-reproducible field is
``timestamp``; drop it with ``--no-timestamp`` for byte-identical reruns.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import itertools
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import Topology, circuit_metrics, load_topology
from .graph import Graph, brute_force_maxcut, cut_value, load_graph
from .grover import (
    ExactLayout, build_full_circuit, cut_class_probabilities, dumps_result, exact_success_probability,
    ideal_sampler,
    noisy_sampler, optimize_theta, simulated_success_probability, solver_result,
    success_probability, threshold_binary_search,
)
from .mitigation import (
    analysis_report, build_calibration_matrix, feasibility_report, kl_divergence, mitigate,
)
from .qasm import eval_angle, export_qasm
from .sim import NoiseModel, load_noise, normalize, run_ideal, run_noisy, sample
from .sim.statevector import RNG_SCHEME
from .synthesis import SynthesisError

OUT_ENV = "GROVERCUT_OUT"
EXIT_OK, EXIT_INVALID, EXIT_SYNTHESIS = 0, 2, 3


class InputError(ValueError):
    """Invalid experiment specification (exit code 2)."""


def parse_theta(text: str, graph: Graph) -> tuple[float, str]:
    """``theta0``, ``opt`` or an angle such as ``0.25pi``, ``pi/4``, ``0.785``."""
    key = text.strip().lower()
    if key == "theta0":
        return math.pi / graph.n_edges, "theta0"
    if key == "opt":
        return optimize_theta(graph).theta_opt, "opt"
    expr = re.sub(r"(\d)\s*pi", r"\1*pi", key)
    try:
        return float(eval_angle(expr)), "explicit"
    except (ValueError, SyntaxError) as exc:
        raise InputError(f"cannot parse theta {text!r}") from exc


def _noise(ref: str | None) -> NoiseModel | None:
    if ref is None or ref.strip().lower() in ("none", "ideal"):
        return None
    return load_noise(ref)


def _topology(ref: str | None) -> Topology | None:
    if ref is None or ref.strip().lower() == "none":
        return None
    return load_topology(ref)


def _widen(noise: NoiseModel, n_qubits: int) -> NoiseModel:
    """Uniform model at the device's mean rates, for layouts wider than the device."""
    if noise.n_qubits >= n_qubits:
        return noise
    return NoiseModel.uniform(n_qubits, float(noise.u2_error.mean()), float(noise.u3_error.mean()),
                              float(noise.readout_error.mean()), noise.default_cx_error)


def _emit(args, name: str, result: dict, tables: dict[str, tuple[list[str], list[list]]]) -> None:
    if not args.no_timestamp:
        result["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = dumps_result(result)
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.json").write_text(text + "\n")
        for suffix, (header, rows) in tables.items():
            with open(d / f"{name}-{suffix}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(rows)
    if not args.quiet:
        print(text)


def _graph_tag(args) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", args.graph)[:40]


# commands ----------------------------------------------------------------------

def cmd_solve(args) -> int:
    graph = load_graph(args.graph)
    theta, mode = parse_theta(args.theta, graph)
    topo = _topology(args.topology)
    noise = _noise(args.noise)
    gc = build_full_circuit(graph, theta, args.toffoli, topo, _virtual(args.virtual),
                            args.oracle, args.iterations)
    state = run_ideal(gc.circuit)
    ideal = gc.coloring_probabilities(state)
    ideal_reg = {gc.register_key(c): p for c, p in ideal.items()}
    if noise is None:
        raw_counts = sample(state, args.shots, args.seed)
    else:
        if noise.n_qubits < gc.circuit.n_qubits:
            raise InputError(f"noise model covers {noise.n_qubits} qubits, circuit needs {gc.circuit.n_qubits}")
        raw_counts = run_noisy(gc.circuit, noise, args.shots, args.seed)
    counts = {gc.register_key(c): v for c, v in gc.decode_counts(raw_counts).items()}
    measured = normalize(counts)
    mitigated = None
    if noise is not None and args.mitigate:
        cal = build_calibration_matrix(noise, gc.circuit.n_qubits, args.cal_shots, args.seed + 1)
        mres = mitigate(cal, normalize(raw_counts))
        full = mres.mitigated
        mitigated = {}
        for key, p in full.items():
            reg = "".join(key[w] for w in gc.data_wires)
            mitigated[reg] = mitigated.get(reg, 0.0) + p
    k_max = brute_force_maxcut(graph)[0]
    best = max(counts, key=lambda r: (cut_value(graph, gc.decode(r)), counts[r], r))
    best_col = gc.decode(best)
    extra = {
        "theta_mode": mode,
        "theta_over_pi": theta / math.pi,
        "oracle": args.oracle,
        "toffoli_variant": args.toffoli,
        "topology": args.topology,
        "noise": args.noise,
        "shots": args.shots,
        "seed": args.seed,
        "rng_scheme": RNG_SCHEME,
        "virtual_vertex": gc.virtual_vertex,
        "register_vertices": gc.vertices,
        "data_wires": gc.data_wires,
        "max_cut": k_max,
        "simulated_success_probability": simulated_success_probability(gc),
        "measured_success_probability": sum(
            p for r, p in measured.items() if cut_value(graph, gc.decode(r)) == k_max),
        "cx_count": gc.circuit.cx_count(),
        "metrics": circuit_metrics(gc.circuit).to_json(),
    }
    if mitigated is not None:
        extra["mitigated_success_probability"] = sum(
            p for r, p in mitigated.items() if cut_value(graph, gc.decode(r)) == k_max)
        extra["analysis"] = analysis_report(ideal_reg, measured, mitigated, mres.residual)
        extra["mitigation_warnings"] = mres.warnings
    result = solver_result(graph, "subdivided-phase", theta, args.iterations, counts,
                           float(success_probability(graph, theta)), best_col, [], **extra)
    rows = []
    for reg in sorted(ideal_reg):
        col = gc.decode(reg)
        row = [reg, col, cut_value(graph, col), ideal_reg[reg], measured.get(reg, 0.0)]
        if mitigated is not None:
            row.append(mitigated.get(reg, 0.0))
        rows.append(row)
    header = ["register", "coloring", "cut", "ideal", "measured"] + (["mitigated"] if mitigated else [])
    _emit(args, f"solve-{_graph_tag(args)}", result, {"distribution": (header, rows)})
    return EXIT_OK


def _virtual(text: str):
    key = text.strip().lower()
    if key in ("auto", "none"):
        return key if key == "auto" else None
    try:
        return int(key)
    except ValueError as exc:
        raise InputError(f"virtual vertex must be auto, none or an index, got {text!r}") from exc


def cmd_exact(args) -> int:
    graph = load_graph(args.graph)
    noise = _noise(args.noise)
    shots = 1 if args.single_shot else args.shots_per_round
    if noise is None:
        sampler = ideal_sampler(graph)
    else:
        width = ExactLayout.for_graph(graph, 0).n_qubits
        sampler = noisy_sampler(graph, _widen(noise, width))
    cut, coloring, trace = threshold_binary_search(graph, sampler, args.seed, shots, args.iterations)
    counts: dict[str, int] = {}
    for h in trace:
        counts[h["coloring"]] = counts.get(h["coloring"], 0) + 1
    k_max = brute_force_maxcut(graph)[0]
    # success_probability: analytic single-round value at the final threshold t = max cut
    result = solver_result(graph, "exact-threshold", None, args.iterations or 0, counts,
                           exact_success_probability(graph, k_max), coloring, trace,
                           rounds=len(trace), shots_per_round=shots, noise=args.noise, seed=args.seed,
                           max_cut=k_max, found_max_cut=cut == k_max)
    rows = [[h["round"], h["t"], h["iterations"], h["coloring"], h["cut"], int(h["legal"]), h["lo"], h["hi"]]
            for h in trace]
    _emit(args, f"exact-{_graph_tag(args)}", result,
          {"trace": (["round", "t", "iterations", "coloring", "cut", "legal", "lo", "hi"], rows)})
    return EXIT_OK


def cmd_analyze(args) -> int:
    graph = load_graph(args.graph)
    plan = optimize_theta(graph)
    thetas = np.linspace(0.0, math.pi, args.points)
    ps = success_probability(graph, thetas)
    topo = _topology(args.topology)
    noise = _noise(args.noise)
    gc = build_full_circuit(graph, plan.theta_opt, args.toffoli, topo, _virtual(args.virtual), args.oracle)
    metrics = circuit_metrics(gc.circuit, args.eps_eff if args.eps_eff else 0.01)
    feas = feasibility_report(gc.circuit, noise, args.eps_eff)
    registers = ["".join(bits) for bits in itertools.product("01", repeat=len(gc.vertices))]
    # a register string stands for one coloring, or two complementary ones when a vertex is pinned
    mult = 1 if gc.virtual_vertex is None else 2
    uniform = {r: 1.0 / len(registers) for r in registers}
    kl = {}
    for label, th in (("theta0", plan.theta0), ("theta_opt", plan.theta_opt)):
        by_cut = cut_class_probabilities(graph, th)
        ideal = {r: mult * by_cut[cut_value(graph, gc.decode(r))] for r in registers}
        nats = kl_divergence(uniform, ideal)
        kl[label] = {"theta": th, "kl_nats": nats, "kl_bits": nats / math.log(2)}
    k_max, argmax = brute_force_maxcut(graph)
    result = {
        "schema": 1,
        "graph": graph.to_json(),
        "method": "analyze",
        "theta_plan": plan.to_json(),
        # summed over all optimal colorings, and for a single one of them
        "success_probability": {"theta0": plan.p_theta0, "theta_opt": plan.p_opt},
        "success_probability_single_coloring": {
            "theta0": plan.p_theta0 / len(argmax), "theta_opt": plan.p_opt / len(argmax)},
        "kl_uniform_vs_ideal": kl,
        "metrics": metrics.to_json(),
        "feasibility": feas,
        "max_cut": k_max,
        "sweep_points": args.points,
    }
    rows = [[float(t), float(t / math.pi), float(p)] for t, p in zip(thetas, ps)]
    _emit(args, f"analyze-{_graph_tag(args)}", result, {"sweep": (["theta", "theta_over_pi", "p"], rows)})
    return EXIT_OK


def cmd_export(args) -> int:
    graph = load_graph(args.graph)
    theta, _ = parse_theta(args.theta, graph)
    topo = _topology(args.topology)
    gc = build_full_circuit(graph, theta, args.toffoli, topo, _virtual(args.virtual), args.oracle)
    text = export_qasm(gc.circuit)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text)
        if not args.quiet:
            print(json.dumps({"schema": 1, "qasm": args.output, "cx_count": gc.circuit.cx_count(),
                              "data_wires": gc.data_wires}))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    noise = load_noise(args.noise)
    n = args.qubits or noise.n_qubits
    cal = build_calibration_matrix(noise, n, args.shots, args.seed, gate_noise=args.gate_noise)
    result = cal.to_json()
    result.update({"noise": args.noise, "shots": args.shots, "seed": args.seed,
                   "gate_noise": args.gate_noise, "rng_scheme": RNG_SCHEME})
    rows = [[i] + list(map(float, row)) for i, row in enumerate(cal.matrix)]
    _emit(args, f"calibrate-{re.sub(r'[^A-Za-z0-9_.-]+', '_', args.noise)[:40]}", result,
          {"matrix": (["observed"] + [f"prepared_{j}" for j in range(1 << n)], rows)})
    return EXIT_OK


# parser -----------------------------------------------------------------------

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grovercut", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV}; unset = stdout only)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--quiet", action="store_true", help="do not print the JSON result")
    common.add_argument("--no-timestamp", action="store_true")

    circuit = argparse.ArgumentParser(add_help=False)
    circuit.add_argument("--graph", required=True, help="k13, k14, path:5, inline JSON or a .json file")
    circuit.add_argument("--oracle", choices=["exact4cx", "approx2cx"], default="exact4cx")
    circuit.add_argument("--toffoli", choices=["swap", "iX", "M", "6cx"], default="swap")
    circuit.add_argument("--topology", default="none", help="t5, line:n, tree-embed:n, full:n, JSON or none")
    circuit.add_argument("--virtual", default="auto", help="auto, none or a vertex index")

    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common, circuit], help="run the subdivided-phase solver")
    s.add_argument("--theta", default="opt")
    s.add_argument("--noise", default="none")
    s.add_argument("--shots", type=_positive, default=8192)
    s.add_argument("--cal-shots", type=_positive, default=8192)
    s.add_argument("--iterations", type=_positive, default=1)
    s.add_argument("--no-mitigate", dest="mitigate", action="store_false")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exact", parents=[common], help="threshold binary search with the exact oracle")
    e.add_argument("--graph", required=True)
    e.add_argument("--noise", default="none")
    e.add_argument("--shots-per-round", type=_positive, default=32)
    e.add_argument("--single-shot", action="store_true", help="one measurement per round")
    e.add_argument("--iterations", type=_positive, default=None)
    e.set_defaults(func=cmd_exact)

    a = sub.add_parser("analyze", parents=[common, circuit], help="theta sweep, KL, KQ and feasibility")
    a.add_argument("--points", type=_positive, default=256)
    a.add_argument("--noise", default="none")
    a.add_argument("--eps-eff", type=float, default=None)
    a.set_defaults(func=cmd_analyze)

    x = sub.add_parser("export", parents=[common, circuit], help="write the lowered circuit as QASM")
    x.add_argument("--theta", default="opt")
    x.add_argument("--output", "-o", default="-")
    x.set_defaults(func=cmd_export)

    c = sub.add_parser("calibrate", parents=[common], help="build a readout calibration matrix")
    c.add_argument("--noise", required=True)
    c.add_argument("--qubits", type=_positive, default=None)
    c.add_argument("--shots", type=_positive, default=8192)
    c.add_argument("--gate-noise", action="store_true")
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SynthesisError as exc:
        print(f"synthesis failure: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid specification: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
