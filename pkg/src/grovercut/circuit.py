"""Gate-level circuit IR over the {u1, u2, u3, cx} hardware gate set.

Named macro gates (Toffoli variants, multi-controlled X/Z, controlled
phase) may appear in a circuit while it is being assembled; they must be
lowered with :func:`grovercut.synthesis.lower` before simulation or export.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

PRIMITIVES = {"u1": 1, "u2": 1, "u3": 1, "cx": 2}
N_PARAMS = {"u1": 1, "u2": 2, "u3": 3, "cx": 0}
MACROS = {"ccx", "toffoli_swap", "rtof_ix", "rtof_m", "rtof_ix_dg", "rtof_m_dg", "mcx", "mcz", "cp"}

ROLES = {"data", "ancilla", "accumulator", "flag"}


class InvalidCircuitError(ValueError):
    """Circuit cannot be simulated or exported as given."""


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    # mcx / mcz: per-control values the gate conditions on (1 = closed control)
    ctrl_state: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.name} on repeated qubits {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError(f"non-finite angle in {self.name}{self.params}")
        if self.name in PRIMITIVES:
            if len(self.qubits) != PRIMITIVES[self.name]:
                raise ValueError(f"{self.name} takes {PRIMITIVES[self.name]} qubit(s)")
            if len(self.params) != N_PARAMS[self.name]:
                raise ValueError(f"{self.name} takes {N_PARAMS[self.name]} angle(s)")
        elif self.name not in MACROS:
            raise ValueError(f"unknown gate {self.name!r}")

    @property
    def is_primitive(self) -> bool:
        return self.name in PRIMITIVES

    def remap(self, mapping: Sequence[int] | dict[int, int]) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.qubits), self.params, self.ctrl_state)

    def inverse(self) -> "Gate":
        q, p = self.qubits, self.params
        if self.name == "u1":
            return Gate("u1", q, (-p[0],))
        if self.name == "u2":
            # U2(phi, lam)^-1 = U2(pi - lam, -phi - pi)
            return Gate("u2", q, (math.pi - p[1], -p[0] - math.pi))
        if self.name == "u3":
            return Gate("u3", q, (-p[0], -p[2], -p[1]))
        if self.name == "cp":
            return Gate("cp", q, (-p[0],))
        if self.name in ("rtof_ix", "rtof_m"):
            return Gate(self.name + "_dg", q)
        if self.name.endswith("_dg"):
            return Gate(self.name[:-3], q)
        if self.name == "toffoli_swap":
            # (SWAP . CCX)^-1 = CCX . SWAP, which is toffoli_swap with the last two operands exchanged
            return Gate("toffoli_swap", (q[0], q[2], q[1]))
        return self  # cx, ccx, mcx, mcz are self-inverse


@dataclass
class Circuit:
    """Ordered gate list on ``n_qubits`` qubits; qubit 0 is the least significant bit."""

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    labels: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.gates:
            self._check(g)
        for q, role in self.labels.items():
            if role not in ROLES:
                raise ValueError(f"unknown qubit role {role!r}")

    def _check(self, gate: Gate) -> None:
        if max(gate.qubits) >= self.n_qubits:
            raise ValueError(f"gate {gate.name} on {gate.qubits} exceeds {self.n_qubits} qubits")

    # builders -----------------------------------------------------------

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, other: "Circuit | Iterable[Gate]", qubits: Sequence[int] | None = None) -> "Circuit":
        """Append gates of ``other``; ``qubits[i]`` is where its qubit ``i`` lands."""
        gates = other.gates if isinstance(other, Circuit) else list(other)
        for g in gates:
            self.append(g.remap(qubits) if qubits is not None else g)
        return self

    def u1(self, lam: float, q: int) -> "Circuit":
        return self.append(Gate("u1", (q,), (float(lam),)))

    def u2(self, phi: float, lam: float, q: int) -> "Circuit":
        return self.append(Gate("u2", (q,), (float(phi), float(lam))))

    def u3(self, theta: float, phi: float, lam: float, q: int) -> "Circuit":
        return self.append(Gate("u3", (q,), (float(theta), float(phi), float(lam))))

    def cx(self, control: int, target: int) -> "Circuit":
        return self.append(Gate("cx", (control, target)))

    def h(self, q: int) -> "Circuit":
        return self.u2(0.0, math.pi, q)

    def x(self, q: int) -> "Circuit":
        return self.u3(math.pi, 0.0, math.pi, q)

    def z(self, q: int) -> "Circuit":
        return self.u1(math.pi, q)

    def macro(self, name: str, qubits: Sequence[int], params: Sequence[float] = (),
              ctrl_state: Sequence[int] | None = None) -> "Circuit":
        return self.append(Gate(name, tuple(qubits), tuple(params),
                                tuple(ctrl_state) if ctrl_state is not None else None))

    # queries ------------------------------------------------------------

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)], dict(self.labels))

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, list(self.gates), dict(self.labels))

    def is_lowered(self) -> bool:
        return all(g.is_primitive for g in self.gates)

    def cx_count(self) -> int:
        return sum(g.name == "cx" for g in self.gates)

    def count(self, name: str) -> int:
        return sum(g.name == name for g in self.gates)

    def touched_qubits(self) -> set[int]:
        return {q for g in self.gates for q in g.qubits}

    def role_qubits(self, role: str) -> list[int]:
        return sorted(q for q, r in self.labels.items() if r == role)

    def cx_pairs(self) -> list[tuple[int, int]]:
        return [(g.qubits[0], g.qubits[1]) for g in self.gates if g.name == "cx"]

    def __len__(self) -> int:
        return len(self.gates)


# topology -----------------------------------------------------------------

@dataclass(frozen=True)
class Topology:
    n_qubits: int
    edges: frozenset[frozenset[int]]

    def __init__(self, n_qubits: int, edges: Iterable[Sequence[int]]):
        norm = set()
        for a, b in edges:
            if a == b or not (0 <= a < n_qubits and 0 <= b < n_qubits):
                raise ValueError(f"bad coupling edge ({a}, {b})")
            norm.add(frozenset((int(a), int(b))))
        object.__setattr__(self, "n_qubits", int(n_qubits))
        object.__setattr__(self, "edges", frozenset(norm))

    def connected(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.edges

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.edges)

    def to_json(self) -> dict:
        return {"n": self.n_qubits, "edges": [list(e) for e in self.edge_list()]}

    @classmethod
    def from_json(cls, data: dict | str) -> "Topology":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["n"], data["edges"])


# Coupling map shared by both 5-qubit devices in the appendix tables.
T5_EDGES = [(0, 1), (1, 2), (1, 3), (3, 4)]


def tree_embed_edges(n: int) -> tuple[int, list[tuple[int, int]]]:
    """Caterpillar layout that runs C^nX without routing.

    Data qubits ``d_0..d_n`` sit at indices ``0..n`` and ancillas
    ``a_0..a_{n-3}`` at ``n+1..2n-2``. Ancilla ``a_0`` touches ``d_0`` and
    ``d_1``; ``a_{k+1}`` touches ``a_k`` and ``d_{k+2}``; the last ancilla
    continues as a line into ``d_{n-1} - d_n``.
    """
    if n < 3:
        raise ValueError("tree-embed needs n >= 3")
    a = [n + 1 + k for k in range(n - 2)]
    edges = [(0, a[0]), (1, a[0])]
    for k in range(n - 3):
        edges += [(a[k], a[k + 1]), (k + 2, a[k + 1])]
    edges += [(a[-1], n - 1), (n - 1, n)]
    return 2 * n - 1, edges


def topology_preset(name: str) -> Topology:
    """``t5``, ``line:<n>``, ``tree-embed:<n>``, ``full:<n>``."""
    key = name.strip().lower()
    if key in ("t5", "ourense", "valencia"):
        return Topology(5, T5_EDGES)
    kind, _, arg = key.partition(":")
    if kind == "line" and arg:
        n = int(arg)
        return Topology(n, [(k, k + 1) for k in range(n - 1)])
    if kind == "tree-embed" and arg:
        n_q, edges = tree_embed_edges(int(arg))
        return Topology(n_q, edges)
    if kind == "full" and arg:
        n = int(arg)
        return Topology(n, [(a, b) for a in range(n) for b in range(a + 1, n)])
    raise ValueError(f"unknown topology preset {name!r}")


def load_topology(ref: str) -> Topology:
    text = ref.strip()
    if text.startswith("{"):
        return Topology.from_json(text)
    if text.endswith(".json"):
        with open(text) as fh:
            return Topology.from_json(json.load(fh))
    return topology_preset(text)


def validate_topology(circuit: Circuit, topo: Topology) -> list[tuple[int, tuple[int, int]]]:
    """``(gate index, pair)`` for every two-qubit gate not on a coupling edge."""
    if circuit.n_qubits > topo.n_qubits:
        raise ValueError(f"circuit has {circuit.n_qubits} qubits, topology only {topo.n_qubits}")
    out = []
    for i, g in enumerate(circuit.gates):
        if len(g.qubits) < 2:
            continue
        if g.name == "cx" or len(g.qubits) == 2:
            if not topo.connected(*g.qubits):
                out.append((i, g.qubits))
        else:
            # unlowered macro: cannot be placed on hardware as a whole
            out.append((i, g.qubits))
    return out


# metrics ------------------------------------------------------------------

def quantum_volume(m: int, d: int) -> int:
    if m < 1 or d < 1:
        raise ValueError("quantum volume needs m, d >= 1")
    return 2 ** min(m, d)


def cx_depth(circuit: Circuit) -> int:
    """Depth counting only CX layers; single-qubit gates are free."""
    level: dict[int, int] = {}
    depth = 0
    for a, b in circuit.cx_pairs():
        d = max(level.get(a, 0), level.get(b, 0)) + 1
        level[a] = level[b] = d
        depth = max(depth, d)
    return depth


@dataclass(frozen=True)
class Metrics:
    width: int
    data_qubits: int
    two_qubit_depth: int
    cx_count: int
    qv: int
    kq: int
    kq_all_qubits: int
    eps_eff: float
    feasible: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "width": self.width, "data_qubits": self.data_qubits,
            "two_qubit_depth": self.two_qubit_depth, "cx_count": self.cx_count,
            "qv": self.qv, "kq": self.kq, "kq_all_qubits": self.kq_all_qubits,
            "eps_eff": self.eps_eff, "feasible": self.feasible, "note": self.note,
        }


def circuit_metrics(circuit: Circuit, eps_eff: float = 0.01) -> Metrics:
    """Width, CX depth, CX count, QV proxy, KQ and the ``m*d < 1/eps_eff`` test.

    KQ multiplies the CX count by the number of data-labelled qubits when
    labels exist (the convention used for the reported 21 and 52), and
    ``kq_all_qubits`` by every touched qubit.
    """
    if not 0.0 < eps_eff <= 1.0:
        raise ValueError(f"eps_eff must lie in (0, 1], got {eps_eff}")
    k = circuit.cx_count()
    m = len(circuit.touched_qubits())
    data = circuit.role_qubits("data")
    q = len(data) if data else m
    d = cx_depth(circuit)
    note = ""
    if data and q != m:
        note = f"kq counts {q} data qubits; {m - q} ancilla/work qubit(s) excluded"
    return Metrics(
        width=m, data_qubits=q, two_qubit_depth=d, cx_count=k,
        qv=2 ** min(m, d), kq=k * q, kq_all_qubits=k * m, eps_eff=eps_eff,
        feasible=m * d < 1.0 / eps_eff, note=note,
    )
