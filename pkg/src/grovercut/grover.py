"""Grover MAX-CUT solvers.

Two flavours share the diffusion block:

* exact: an accumulator register counts cut edges, ``pshift`` flips the
  sign of states whose count reaches a threshold ``t``, and an adaptive
  binary search over ``t`` homes in on the maximum;
* subdivided phase: every cut edge contributes a phase ``theta``, so one
  application of the oracle marks each coloring with ``e^{i cut theta}``.
  A "virtual" vertex is pinned to |0> and dropped from the register, which
  turns its incident edge oracles into single-qubit phases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .circuit import Circuit, Topology, validate_topology
from .graph import (
    Graph, brute_force_maxcut, cut_histogram, cut_table, cut_value, index_to_coloring,
)
from .sim import NoiseModel, StateVector, probabilities, run_ideal, run_noisy
from .synthesis import (
    SynthesisError, approx_sub_oracle_2cx, cut_suboracle, diffusion, pshift,
    sub_oracle_phase,
)

PI = math.pi
ORACLE_FLAVORS = ("exact4cx", "approx2cx")
TOFFOLI_VARIANTS = ("swap", "iX", "M", "6cx")


def _variant(toffoli_variant: str) -> tuple[str, bool]:
    """(RTOF flavour, use the 7-CX line Toffoli in the middle)."""
    key = {"swap": "iX", "ix": "iX", "m": "M", "6cx": "6cx"}.get(toffoli_variant.lower())
    if key is None:
        raise ValueError(f"unknown toffoli variant {toffoli_variant!r}; choose from {TOFFOLI_VARIANTS}")
    if key == "6cx":
        return "iX", False
    return key, True


# exact oracle --------------------------------------------------------------------

@dataclass(frozen=True)
class ExactLayout:
    """Qubit roles for the accumulator oracle.

    Data ``0..|V|-1``, then the accumulator (least significant bit first),
    the flag, and clean ancillas shared by every multi-controlled gate.
    """

    n_data: int
    m_acc: int
    threshold: int
    n_ancilla: int

    @classmethod
    def for_graph(cls, graph: Graph, threshold: int) -> "ExactLayout":
        m = max(1, math.ceil(math.log2(graph.n_edges + 1)))
        n_anc = max(m - 2, graph.n_vertices - 3, 0)
        layout = cls(graph.n_vertices, m, threshold, n_anc)
        layout.check(graph)
        return layout

    def check(self, graph: Graph) -> None:
        if self.n_data != graph.n_vertices:
            raise ValueError("layout data width does not match the graph")
        if (1 << self.m_acc) <= graph.n_edges:
            raise ValueError(f"accumulator of {self.m_acc} bits would wrap at {graph.n_edges} edges")
        if not 0 <= self.threshold <= graph.n_edges:
            raise ValueError(f"threshold {self.threshold} outside [0, {graph.n_edges}]")
        if self.n_ancilla < max(self.m_acc - 2, self.n_data - 3, 0):
            raise ValueError("not enough ancillas for the multi-controlled gates")

    @property
    def data(self) -> list[int]:
        return list(range(self.n_data))

    @property
    def accumulator(self) -> list[int]:
        return list(range(self.n_data, self.n_data + self.m_acc))

    @property
    def flag(self) -> int:
        return self.n_data + self.m_acc

    @property
    def ancillas(self) -> list[int]:
        start = self.flag + 1
        return list(range(start, start + self.n_ancilla))

    @property
    def n_qubits(self) -> int:
        return self.flag + 1 + self.n_ancilla

    def labels(self) -> dict[int, str]:
        lab = {q: "data" for q in self.data}
        lab.update({q: "accumulator" for q in self.accumulator})
        lab[self.flag] = "flag"
        lab.update({q: "ancilla" for q in self.ancillas})
        return lab


def build_exact_oracle(graph: Graph, layout: ExactLayout) -> Circuit:
    """Mark colorings with cut >= t by a sign flip; work registers end in |0>."""
    layout.check(graph)
    compute = Circuit(layout.n_qubits, labels=layout.labels())
    for a, b in graph.edges:
        compute.extend(cut_suboracle(a, b, layout.accumulator, layout.flag, layout.ancillas).circuit)
    circ = compute.copy()
    circ.extend(pshift(layout.threshold, layout.accumulator, layout.ancillas).circuit)
    circ.extend(compute.inverse())
    return circ


def _exact_round_circuit(graph: Graph, t: int, iterations: int) -> tuple[Circuit, ExactLayout]:
    layout = ExactLayout.for_graph(graph, t)
    oracle = build_exact_oracle(graph, layout)
    diff = diffusion(layout.data, layout.ancillas, swap=False).circuit
    circ = Circuit(layout.n_qubits, labels=layout.labels())
    for q in layout.data:
        circ.h(q)
    for _ in range(iterations):
        circ.extend(oracle)
        circ.extend(diff)
    return circ, layout


@lru_cache(maxsize=256)
def _exact_distribution(graph: Graph, t: int, iterations: int) -> tuple[float, ...]:
    circ, layout = _exact_round_circuit(graph, t, iterations)
    dist = probabilities(run_ideal(circ), layout.data)
    return tuple(dist[index_to_coloring(i, graph.n_vertices)] for i in range(1 << graph.n_vertices))


def exact_grover_once(graph: Graph, t: int, iterations: int = 1) -> dict[str, float]:
    """Ideal distribution over colorings after ``iterations`` oracle+diffusion rounds."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    probs = _exact_distribution(graph, int(t), int(iterations))
    return {index_to_coloring(i, graph.n_vertices): p for i, p in enumerate(probs)}


def marked_count(graph: Graph, t: int) -> int:
    return int(np.count_nonzero(cut_table(graph) >= t))


def grover_iterations(graph: Graph, t: int) -> int:
    """``floor(pi/4 sqrt(N/M))`` with ``M`` colorings reaching ``t``; 0 if none do."""
    m = marked_count(graph, t)
    if m == 0:
        return 0
    return int(math.floor(PI / 4 * math.sqrt((1 << graph.n_vertices) / m)))


# threshold search ------------------------------------------------------------------

# sampler(t, iterations, shots, seed) -> measured colorings
Sampler = Callable[[int, int, int, int], list[str]]


def _draw(dist: Sequence[float], n: int, shots: int, seed: int) -> list[str]:
    p = np.clip(np.asarray(dist, dtype=float), 0.0, None)
    rng = np.random.default_rng(seed)
    idx = rng.choice(p.size, size=shots, p=p / p.sum())
    return [index_to_coloring(int(i), n) for i in idx]


def ideal_sampler(graph: Graph) -> Sampler:
    """Sample from the ideal simulated round; zero iterations means a uniform draw."""
    n = graph.n_vertices

    def sampler(t: int, iterations: int, shots: int, seed: int) -> list[str]:
        if iterations < 1:
            return _draw(np.full(1 << n, 1.0), n, shots, seed)
        return _draw(_exact_distribution(graph, t, iterations), n, shots, seed)

    return sampler


def noisy_sampler(graph: Graph, noise: NoiseModel) -> Sampler:
    """Trajectory-simulated rounds; ``noise`` must cover the full exact layout."""
    n = graph.n_vertices

    def sampler(t: int, iterations: int, shots: int, seed: int) -> list[str]:
        circ, layout = _exact_round_circuit(graph, t, max(iterations, 0))
        counts = run_noisy(circ, noise, shots, seed)
        out = []
        for key in sorted(counts):
            out += [key[:n]] * counts[key]
        rng = np.random.default_rng(seed)
        return [out[i] for i in rng.permutation(len(out))]

    return sampler


@dataclass
class SearchState:
    lo: int
    hi: int
    t: int
    visited: set[int] = field(default_factory=set)
    history: list[dict] = field(default_factory=list)


def _round_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([seed, r]).generate_state(1, np.uint32)[0])


def threshold_binary_search(graph: Graph, sampler: Sampler | None = None, seed: int = 0,
                            shots_per_round: int = 32, iterations: int | None = None
                            ) -> tuple[int, str, list[dict]]:
    """Bisect the threshold on ``[lo, hi]`` until it repeats or the interval empties.

    A round is legal when any of its ``shots_per_round`` measured colorings
    has cut >= t; legal rounds raise ``lo`` past ``t`` and keep the best
    coloring seen, illegal rounds lower ``hi`` below it. With
    ``shots_per_round=1`` every round trusts a single measurement.
    """
    if shots_per_round < 1:
        raise ValueError("shots_per_round must be >= 1")
    sampler = sampler or ideal_sampler(graph)
    st = SearchState(0, graph.n_edges, graph.n_edges // 2)
    best_cut, best = -1, "0" * graph.n_vertices
    r = 0
    while st.lo <= st.hi and st.t not in st.visited:
        t = st.t
        st.visited.add(t)
        its = grover_iterations(graph, t) if iterations is None else iterations
        shots = sampler(t, its, shots_per_round, _round_seed(seed, r))
        cuts = [cut_value(graph, s) for s in shots]
        top = int(np.argmax(cuts))
        legal = cuts[top] >= t
        if legal:
            if cuts[top] > best_cut:
                best_cut, best = cuts[top], shots[top]
            st.lo = t + 1
        else:
            st.hi = t - 1
        st.history.append({"round": r, "t": t, "iterations": its, "coloring": shots[top],
                           "cut": cuts[top], "legal": bool(legal), "lo": st.lo, "hi": st.hi})
        st.t = (st.lo + st.hi) // 2
        r += 1
    if best_cut < 0:
        best_cut = cut_value(graph, best)
    return best_cut, best, st.history


# subdivided phase oracle -------------------------------------------------------------

def resolve_virtual(graph: Graph, virtual_vertex: int | str | None) -> int | None:
    if virtual_vertex is None or virtual_vertex == "none":
        return None
    if virtual_vertex == "auto":
        return graph.max_degree_vertex() if graph.n_vertices > 1 else None
    v = int(virtual_vertex)
    if not 0 <= v < graph.n_vertices:
        raise ValueError(f"virtual vertex {v} not in graph")
    return v


def register_vertices(graph: Graph, virtual_vertex: int | None) -> list[int]:
    return [v for v in range(graph.n_vertices) if v != virtual_vertex]


def build_phase_oracle(graph: Graph, theta: float, virtual_vertex: int | None = None,
                       flavor: str = "exact4cx") -> Circuit:
    """Diagonal ``e^{i cut(x) theta}`` on the register (virtual vertex removed).

    Register qubit ``i`` holds vertex ``register_vertices(...)[i]``. Edges
    touching the virtual vertex cost one ``U1(theta)`` each and no CX.
    """
    if flavor not in ORACLE_FLAVORS:
        raise ValueError(f"unknown oracle flavor {flavor!r}")
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    if virtual_vertex is not None and not 0 <= virtual_vertex < graph.n_vertices:
        raise ValueError(f"virtual vertex {virtual_vertex} not in graph")
    verts = register_vertices(graph, virtual_vertex)
    if not verts:
        raise ValueError("register would be empty")
    pos = {v: i for i, v in enumerate(verts)}
    circ = Circuit(len(verts), labels={i: "data" for i in range(len(verts))})
    for a, b in graph.edges:
        if virtual_vertex in (a, b):
            other = b if a == virtual_vertex else a
            circ.u1(theta, pos[other])
        elif flavor == "exact4cx":
            circ.extend(sub_oracle_phase(theta, pos[a], pos[b]).circuit)
        else:
            circ.extend(approx_sub_oracle_2cx(theta % (2 * PI) if theta > PI else theta,
                                              pos[a], pos[b]).circuit)
    return circ


def alpha_avg(graph: Graph, theta: float, oracle_kind: str = "phase", t: int | None = None) -> complex:
    """Mean oracle phase over uniform input.

    ``phase``: mean of ``e^{i cut theta}``, from the cut histogram;
    ``exact``: mean of the +-1 signs for threshold ``t``.
    """
    n = 1 << graph.n_vertices
    if oracle_kind == "phase":
        hist = cut_histogram(graph)
        return complex(sum(c * np.exp(1j * k * theta) for k, c in hist.items()) / n)
    if oracle_kind == "exact":
        if t is None:
            raise ValueError("exact alpha needs a threshold")
        return complex((n - 2 * marked_count(graph, t)) / n)
    raise ValueError(f"unknown oracle kind {oracle_kind!r}")


def _alpha_grid(graph: Graph, thetas: np.ndarray) -> np.ndarray:
    hist = cut_histogram(graph)
    ks = np.array(list(hist), dtype=float)
    cs = np.array(list(hist.values()), dtype=float)
    return (np.exp(1j * np.outer(thetas, ks)) @ cs) / (1 << graph.n_vertices)


def amplification_factor(graph: Graph, theta: float | np.ndarray) -> np.ndarray | float:
    """``|2 alpha(theta) - e^{i k_max theta}|``: amplitude gain of a maximum cut."""
    k = brute_force_maxcut(graph)[0]
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.abs(2 * _alpha_grid(graph, th) - np.exp(1j * k * th))
    return float(out[0]) if np.ndim(theta) == 0 else out


def success_probability(graph: Graph, theta: float | np.ndarray) -> float | np.ndarray:
    """Probability of measuring any maximum cut after one phase round.

    Identical with or without a virtual vertex: the register halves together
    with the number of optimal colorings.
    """
    k, argmax = brute_force_maxcut(graph)
    return len(argmax) / (1 << graph.n_vertices) * amplification_factor(graph, theta) ** 2


def cut_class_probabilities(graph: Graph, theta: float) -> dict[int, float]:
    """Per-coloring probability after one round, keyed by cut value."""
    a = alpha_avg(graph, theta)
    n = 1 << graph.n_vertices
    return {k: abs(2 * a - np.exp(1j * k * theta)) ** 2 / n for k in cut_histogram(graph)}


def exact_success_probability(graph: Graph, t: int) -> float:
    """One exact round: marked amplitudes grow from ``1/sqrt N`` to ``(2 alpha' + 1)/sqrt N``."""
    n = 1 << graph.n_vertices
    a = alpha_avg(graph, 0.0, "exact", t).real
    return marked_count(graph, t) / n * (2 * a + 1) ** 2


@dataclass(frozen=True)
class ThetaPlan:
    theta0: float
    theta_opt: float
    k_max: int
    factor: float
    p_theta0: float
    p_opt: float

    def to_json(self) -> dict:
        return {"theta0": self.theta0, "theta0_over_pi": self.theta0 / PI,
                "theta_opt": self.theta_opt, "theta_opt_over_pi": self.theta_opt / PI,
                "k_max": self.k_max, "factor": self.factor,
                "p_theta0": self.p_theta0, "p_opt": self.p_opt}


def optimize_theta(graph: Graph, step: float = PI * 1e-4, xtol: float = 1e-7) -> ThetaPlan:
    """Grid search of the amplification factor on (0, pi) plus bounded refinement."""
    from scipy.optimize import minimize_scalar

    if graph.n_edges == 0:
        raise ValueError("graph has no edges")
    k = brute_force_maxcut(graph)[0]
    grid = np.arange(1, int(round(PI / step))) * step
    vals = amplification_factor(graph, grid)
    j = int(np.argmax(vals))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    res = minimize_scalar(lambda x: -amplification_factor(graph, x), bounds=(lo, hi),
                          method="bounded", options={"xatol": xtol})
    th, f = (float(res.x), -float(res.fun)) if -res.fun >= vals[j] else (float(grid[j]), float(vals[j]))
    theta0 = PI / graph.n_edges
    return ThetaPlan(theta0, th, k, f, float(success_probability(graph, theta0)),
                     float(success_probability(graph, th)))


# full circuit ------------------------------------------------------------------------

@dataclass
class GroverCircuit:
    """A placed subdivided-phase Grover circuit and how to read it out.

    ``data_wires[i]`` is the physical qubit holding register vertex
    ``vertices[i]`` at the end, after the SWAPs built into the diffusion.
    """

    circuit: Circuit
    graph: Graph
    theta: float
    iterations: int
    virtual_vertex: int | None
    vertices: list[int]
    initial_wires: list[int]
    data_wires: list[int]
    ancilla_wires: list[int]
    global_phase: float
    toffoli_variant: str
    oracle_flavor: str

    def coloring_probabilities(self, state: StateVector) -> dict[str, float]:
        """Distribution over full colorings (the virtual vertex reads 0)."""
        marg = probabilities(state, self.data_wires)
        out = {}
        for key, p in marg.items():
            out[self.decode(key)] = p
        return out

    def decode(self, register_bits: str) -> str:
        bits = ["0"] * self.graph.n_vertices
        for v, b in zip(self.vertices, register_bits):
            bits[v] = b
        return "".join(bits)

    def decode_counts(self, counts: dict[str, int]) -> dict[str, int]:
        out: dict[str, int] = {}
        for key, c in counts.items():
            reg = "".join(key[w] for w in self.data_wires)
            col = self.decode(reg)
            out[col] = out.get(col, 0) + c
        return out

    def register_key(self, coloring: str) -> str:
        return "".join(coloring[v] for v in self.vertices)


def _interaction_graph(circuit: Circuit):
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(sorted(circuit.touched_qubits()))
    g.add_edges_from(circuit.cx_pairs())
    return g


def place_on_topology(circuit: Circuit, topology: Topology) -> list[int]:
    """Logical-to-physical map making every CX land on a coupling edge.

    Identity is kept when it already works; otherwise the first subgraph
    monomorphism found by networkx is used (deterministic for fixed input).
    """
    import networkx as nx
    from networkx.algorithms import isomorphism

    if circuit.n_qubits <= topology.n_qubits and not validate_topology(circuit, topology):
        return list(range(circuit.n_qubits))
    need = _interaction_graph(circuit)
    hw = nx.Graph()
    hw.add_nodes_from(range(topology.n_qubits))
    hw.add_edges_from(topology.edge_list())
    matcher = isomorphism.GraphMatcher(hw, need)
    for m in matcher.subgraph_monomorphisms_iter():
        inv = {logical: phys for phys, logical in m.items()}
        free = iter(p for p in range(topology.n_qubits) if p not in inv.values())
        return [inv[q] if q in inv else next(free) for q in range(circuit.n_qubits)]
    raise SynthesisError("no placement of the circuit on the topology")


def build_full_circuit(graph: Graph, theta: float, toffoli_variant: str = "swap",
                       topology: Topology | None = None, virtual_vertex: int | str | None = "auto",
                       oracle_flavor: str = "exact4cx", iterations: int = 1) -> GroverCircuit:
    """Uniform preparation, then ``iterations`` rounds of phase oracle and diffusion."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rtof_kind, use_swap = _variant(toffoli_variant)
    vv = resolve_virtual(graph, virtual_vertex)
    verts = register_vertices(graph, vv)
    n = len(verts)
    anc = list(range(n, n + max(n - 3, 0)))
    labels = {q: "data" for q in range(n)}
    labels.update({q: "ancilla" for q in anc})
    logical = Circuit(n + len(anc), labels=labels)
    oracle = build_phase_oracle(graph, theta, vv, oracle_flavor)
    where = list(range(n))
    for q in where:
        logical.h(q)
    gphase = 0.0
    for _ in range(iterations):
        logical.extend(oracle, qubits=where)
        blk = diffusion(where, anc, rtof_kind, swap=use_swap)
        logical.extend(blk.circuit)
        gphase += blk.global_phase
        where = list(blk.output_wires())
    phys = list(range(logical.n_qubits))
    circ = logical
    if topology is not None:
        try:
            phys = place_on_topology(logical, topology)
        except SynthesisError:
            bad = validate_topology(logical, topology) if logical.n_qubits <= topology.n_qubits else []
            raise SynthesisError(f"circuit does not fit topology; violations (gate, pair): {bad}")
        circ = Circuit(topology.n_qubits, labels={phys[q]: r for q, r in labels.items()})
        circ.extend(logical, qubits=phys)
        bad = validate_topology(circ, topology)
        if bad:
            raise SynthesisError(f"topology violations (gate, pair): {bad}")
    return GroverCircuit(
        circuit=circ, graph=graph, theta=float(theta), iterations=iterations, virtual_vertex=vv,
        vertices=verts, initial_wires=[phys[q] for q in range(n)], data_wires=[phys[q] for q in where],
        ancilla_wires=[phys[q] for q in anc], global_phase=gphase % (2 * PI),
        toffoli_variant=toffoli_variant, oracle_flavor=oracle_flavor,
    )


def simulated_success_probability(gc: GroverCircuit) -> float:
    k = brute_force_maxcut(gc.graph)[0]
    dist = gc.coloring_probabilities(run_ideal(gc.circuit))
    return float(sum(p for col, p in dist.items() if cut_value(gc.graph, col) == k))


def solver_result(graph: Graph, method: str, theta: float | None, iterations: int,
                  counts: dict[str, int], success_probability: float, best_coloring: str,
                  trace: list[dict] | None = None, **extra) -> dict:
    """Result record with a fixed key order so identical runs serialise identically."""
    out = {
        "schema": 1,
        "graph": graph.to_json(),
        "method": method,
        "theta": theta,
        "iterations": iterations,
        "counts": dict(sorted(counts.items())),
        "success_probability": success_probability,
        "best_coloring": best_coloring,
        "cut": cut_value(graph, best_coloring),
        "trace": trace or [],
    }
    out.update(extra)
    return out


def dumps_result(result: dict) -> str:
    return json.dumps(result, indent=2, sort_keys=False, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, set):
        return sorted(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


__all__ = [
    "ExactLayout", "GroverCircuit", "SearchState", "ThetaPlan", "alpha_avg", "amplification_factor",
    "build_exact_oracle", "build_full_circuit", "build_phase_oracle", "cut_class_probabilities",
    "exact_grover_once", "exact_success_probability", "grover_iterations", "ideal_sampler",
    "marked_count", "noisy_sampler", "optimize_theta", "place_on_topology", "register_vertices",
    "resolve_virtual", "simulated_success_probability", "solver_result", "success_probability",
    "threshold_binary_search",
]
