"""Lowering of macro gates to {u1, u2, u3, cx}.

Every builder takes absolute qubit indices and returns a
:class:`SynthesisedBlock` whose circuit is sized to the largest index used,
so callers can splice it into a wider circuit with ``Circuit.extend``.
Global phases are recorded rather than normalised away: for exact blocks
``U_block == exp(1j * global_phase) * U_semantic``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate

PI = math.pi


class SynthesisError(RuntimeError):
    """A block could not be realised (fit quality, topology, ancilla budget)."""


@dataclass
class SynthesisedBlock:
    circuit: Circuit
    semantic: str
    relative_phase: bool = False
    global_phase: float = 0.0
    # permutation[i] = position (within ``wires``) that holds logical wire i afterwards
    wires: tuple[int, ...] = ()
    permutation: tuple[int, ...] = ()
    cx_count: int = field(init=False)

    def __post_init__(self):
        self.cx_count = self.circuit.cx_count()
        if not self.permutation:
            self.permutation = tuple(range(len(self.wires)))

    def output_wires(self) -> tuple[int, ...]:
        """Physical qubit holding each logical wire after the block."""
        return tuple(self.wires[p] for p in self.permutation)


@dataclass
class ApproximationReport:
    theta: float
    fidelity: float
    circuit: Circuit
    params: np.ndarray
    convention: str = "trace-overlap |Tr(U_target^dag U)|/4"

    @property
    def cx_count(self) -> int:
        return self.circuit.cx_count()


def _new(*qubits: int) -> Circuit:
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"qubits must be distinct, got {qubits}")
    return Circuit(max(qubits) + 1)


# two-qubit phase blocks -----------------------------------------------------

def crz(theta: float, control: int, target: int, symmetric: bool = True) -> SynthesisedBlock:
    """Controlled Z-rotation from two CX.

    The target sees ``U1(theta/2)``, CX, ``U1(-theta/2)``, CX, which is
    ``diag(1, 1, e^{-i theta/2}, e^{i theta/2})``. With ``symmetric`` the
    control additionally gets ``U1(theta/2)``, turning the block into the
    controlled phase ``diag(1, 1, 1, e^{i theta})``.
    """
    c = _new(control, target)
    if symmetric:
        c.u1(theta / 2, control)
    c.u1(theta / 2, target)
    c.cx(control, target)
    c.u1(-theta / 2, target)
    c.cx(control, target)
    semantic = "CP(theta)" if symmetric else "CRZ(theta)"
    return SynthesisedBlock(c, semantic, wires=(control, target))


def sub_oracle_phase(theta: float, a: int, b: int) -> SynthesisedBlock:
    """Phase ``e^{i theta}`` when the two endpoint colours differ.

    ``X_B CP X_B X_A CP X_A``: each open-controlled phase fires on one of
    ``|01>`` and ``|10>``.
    """
    c = _new(a, b)
    c.x(a)
    c.extend(crz(theta, a, b).circuit)
    c.x(a)
    c.x(b)
    c.extend(crz(theta, b, a).circuit)
    c.x(b)
    return SynthesisedBlock(c, "diag(1, e^it, e^it, 1)", wires=(a, b))


def _u3(t, p, l):
    ct, st = math.cos(t / 2), math.sin(t / 2)
    return np.array([[ct, -np.exp(1j * l) * st], [np.exp(1j * p) * st, np.exp(1j * (p + l)) * ct]])


def _u1(l):
    return np.array([[1, 0], [0, np.exp(1j * l)]])


# index = bit(a) + 2 * bit(b); a controls both CX
_CX_AB = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)


def _ansatz_unitary(x: np.ndarray) -> np.ndarray:
    first = np.kron(_u3(*x[3:6]), _u3(*x[0:3]))
    mid = np.kron(_u3(*x[7:10]), _u1(x[6]))
    last = np.kron(_u3(*x[13:16]), _u3(*x[10:13]))
    return last @ _CX_AB @ mid @ _CX_AB @ first


def _ansatz_circuit(x: np.ndarray, a: int, b: int) -> Circuit:
    c = _new(a, b)
    c.u3(*x[0:3], a)
    c.u3(*x[3:6], b)
    c.cx(a, b)
    c.u1(x[6], a)
    c.u3(*x[7:10], b)
    c.cx(a, b)
    c.u3(*x[10:13], a)
    c.u3(*x[13:16], b)
    return c


@lru_cache(maxsize=64)
def _fit_2cx(theta: float, starts: int, seed: int) -> tuple[tuple[float, ...], float]:
    from scipy.optimize import minimize

    target = np.diag([1, np.exp(1j * theta), np.exp(1j * theta), 1])
    tdag = target.conj().T

    def infidelity(x):
        return 1.0 - abs(np.trace(tdag @ _ansatz_unitary(x))) / 4.0

    rng = np.random.default_rng(seed)
    best_x, best_f = None, -1.0
    for _ in range(starts):
        x0 = rng.uniform(-PI, PI, 16)
        res = minimize(infidelity, x0, method="BFGS", options={"gtol": 1e-10, "maxiter": 2000})
        f = 1.0 - res.fun
        if f > best_f:
            best_x, best_f = res.x, f
        if best_f > 1.0 - 1e-10:
            break
    return tuple(float(v) for v in best_x), float(best_f)


def approx_sub_oracle_2cx(theta: float, a: int = 0, b: int = 1, starts: int = 16, seed: int = 0,
                          min_fidelity: float = 0.99) -> ApproximationReport:
    """Fit ``(U3 x U3) CX (U1 x U3) CX (U3 x U3)`` to the edge phase oracle.

    Multi-start BFGS on the trace-overlap infidelity; at least ``starts``
    random initial points unless an earlier start already converges to
    within 1e-10.
    """
    if not 0.0 <= theta <= PI:
        raise ValueError("theta must lie in [0, pi]")
    x, fid = _fit_2cx(round(float(theta), 15), max(starts, 16), seed)
    if fid < min_fidelity:
        raise SynthesisError(f"2-CX fit reached fidelity {fid:.6f} < {min_fidelity} at theta={theta}")
    x = np.array(x)
    return ApproximationReport(theta, fid, _ansatz_circuit(x, a, b), x)


# Toffoli family ---------------------------------------------------------------

def toffoli_6cx(c0: int, c1: int, t: int) -> SynthesisedBlock:
    """Textbook CCX with six CX and T gates; needs all three pairs coupled."""
    c = _new(c0, c1, t)
    T, Tdg = PI / 4, -PI / 4
    c.h(t)
    c.cx(c1, t)
    c.u1(Tdg, t)
    c.cx(c0, t)
    c.u1(T, t)
    c.cx(c1, t)
    c.u1(Tdg, t)
    c.cx(c0, t)
    c.u1(T, c1)
    c.u1(T, t)
    c.h(t)
    c.cx(c0, c1)
    c.u1(T, c0)
    c.u1(Tdg, c1)
    c.cx(c0, c1)
    return SynthesisedBlock(c, "CCX", wires=(c0, c1, t))


def rtof_ix(c0: int, c1: int, t: int, dagger: bool = False) -> SynthesisedBlock:
    """Three-CX relative-phase Toffoli from four U1 and two U2.

    Maps ``|110> -> i|111>``, ``|111> -> -i|110>`` and negates ``|101>``
    (labels ordered ``c0 c1 t``). The target must sit between the controls.
    """
    c = _new(c0, c1, t)
    c.h(t)
    c.u1(PI / 4, t)
    c.cx(c1, t)
    c.u1(-PI / 4, t)
    c.cx(c0, t)
    c.u1(PI / 4, t)
    c.cx(c1, t)
    c.u1(-PI / 4, t)
    c.h(t)
    if dagger:
        c = c.inverse()
    return SynthesisedBlock(c, "RCCX-iX" + ("^dag" if dagger else ""), relative_phase=True,
                            wires=(c0, c1, t))


def rtof_m(c0: int, c1: int, t: int, dagger: bool = False) -> SynthesisedBlock:
    """Margolus gate: CCX with the sign of ``|101>`` flipped, four RY = U3(theta, 0, 0)."""
    c = _new(c0, c1, t)
    c.u3(PI / 4, 0.0, 0.0, t)
    c.cx(c1, t)
    c.u3(PI / 4, 0.0, 0.0, t)
    c.cx(c0, t)
    c.u3(-PI / 4, 0.0, 0.0, t)
    c.cx(c1, t)
    c.u3(-PI / 4, 0.0, 0.0, t)
    if dagger:
        c = c.inverse()
    return SynthesisedBlock(c, "CCX.Z(|101>)" + ("^dag" if dagger else ""), relative_phase=True,
                            wires=(c0, c1, t))


def rtof(variant: str, c0: int, c1: int, t: int, dagger: bool = False) -> SynthesisedBlock:
    v = variant.lower()
    if v == "ix":
        return rtof_ix(c0, c1, t, dagger)
    if v == "m":
        return rtof_m(c0, c1, t, dagger)
    raise ValueError(f"unknown RTOF variant {variant!r}")


# CX network on the line c0 - c1 - t (wire indices 0, 1, 2). It visits all
# seven parities of (c0, c1, t) and leaves wires 1 and 2 exchanged.
_SWAP_TOFFOLI_CX = ((0, 1), (2, 1), (0, 1), (1, 2), (0, 1), (2, 1), (0, 1))


def toffoli_swap(c0: int, c1: int, t: int) -> SynthesisedBlock:
    """``SWAP(c1, t) . CCX(c0, c1 -> t)`` with seven CX on a line.

    CCX is ``H_t CCZ H_t`` and CCZ is the phase polynomial
    ``T`` on odd-weight parities and ``T^dag`` on even-weight ones. The CX
    network above exposes each parity on some wire exactly when the phase
    is due and ends with the values of ``c1`` and ``t`` exchanged, so the
    closing Hadamard lands on the wire ``c1``.
    """
    wires = (c0, c1, t)
    c = _new(*wires)
    c.h(t)
    contents = [1, 2, 4]
    done = set()

    def phase(w):
        par = contents[w]
        if par not in done:
            done.add(par)
            c.u1(PI / 4 if bin(par).count("1") % 2 else -PI / 4, wires[w])

    for w in range(3):
        phase(w)
    for ctl, tgt in _SWAP_TOFFOLI_CX:
        c.cx(wires[ctl], wires[tgt])
        contents[tgt] ^= contents[ctl]
        phase(tgt)
    assert len(done) == 7 and contents == [1, 4, 2]
    c.h(c1)
    return SynthesisedBlock(c, "SWAP(c1,t).CCX", wires=wires, permutation=(0, 2, 1))


# multi-controlled gates -------------------------------------------------------

def mcx(controls: Sequence[int], target: int, ancillas: Sequence[int] = (), variant: str = "iX",
        swap: bool = False, ctrl_state: Sequence[int] | None = None) -> SynthesisedBlock:
    """X on ``target`` when every control matches ``ctrl_state`` (default all ones).

    Three or more controls use the ancilla ladder: relative-phase Toffolis
    compute the partial conjunctions into clean ancillas, one exact Toffoli
    hits the target, and the ladder is undone with inverse RTOFs so every
    residual phase cancels. With ``swap`` the central Toffoli is the line
    variant and the last control ends up exchanged with the target.
    """
    controls = list(controls)
    k = len(controls)
    wires = (*controls, target)
    if k >= 3 and len(ancillas) < k - 2:
        raise SynthesisError(f"{k}-controlled X needs {k - 2} ancillas, got {len(ancillas)}")
    used_anc = list(ancillas[: max(k - 2, 0)])
    c = _new(*wires, *used_anc)
    state = list(ctrl_state) if ctrl_state is not None else [1] * k
    if len(state) != k:
        raise ValueError("ctrl_state length must match controls")
    for q, s in zip(controls, state):
        if not s:
            c.x(q)
    perm = tuple(range(k + 1))
    if k == 0:
        c.x(target)
    elif k == 1:
        c.cx(controls[0], target)
    elif k == 2:
        if swap:
            c.extend(toffoli_swap(controls[0], controls[1], target).circuit)
        else:
            c.extend(toffoli_6cx(controls[0], controls[1], target).circuit)
    else:
        a = used_anc
        ladder = [(controls[0], controls[1], a[0])]
        ladder += [(a[j], controls[j + 2], a[j + 1]) for j in range(k - 3)]
        for trip in ladder:
            c.extend(rtof(variant, *trip).circuit)
        if swap:
            c.extend(toffoli_swap(a[-1], controls[-1], target).circuit)
        else:
            c.extend(toffoli_6cx(a[-1], controls[-1], target).circuit)
        for trip in reversed(ladder):
            c.extend(rtof(variant, *trip, dagger=True).circuit)
    if swap and k >= 2:
        perm = tuple(range(k - 1)) + (k, k - 1)
    # undo open controls on whichever wire now holds each control's value
    out = [wires[p] for p in perm]
    for i, s in enumerate(state):
        if not s:
            c.x(out[i])
    sem = f"C^{k}X" + (" then SWAP(last control, target)" if swap and k >= 2 else "")
    return SynthesisedBlock(c, sem, wires=wires, permutation=perm)


def cnx(n: int, data: Sequence[int], ancilla: Sequence[int], variant: str = "iX") -> SynthesisedBlock:
    """C^nX on ``n + 1`` data qubits with ``n - 2`` ancillas, 6n - 5 CX.

    The output has the last two data qubits exchanged.
    """
    if n < 3:
        raise ValueError("cnx needs n >= 3; use toffoli_swap for two controls")
    if len(data) != n + 1 or len(ancilla) != n - 2:
        raise ValueError(f"cnx({n}) needs {n + 1} data and {n - 2} ancilla qubits")
    return mcx(data[:n], data[n], ancilla, variant, swap=True)


def mcz(qubits: Sequence[int], values: Sequence[int] | None = None,
        ancillas: Sequence[int] = (), variant: str = "iX") -> SynthesisedBlock:
    """Phase -1 on the basis states where ``qubits`` equal ``values``."""
    qubits = list(qubits)
    vals = list(values) if values is not None else [1] * len(qubits)
    if not qubits:
        raise ValueError("mcz needs at least one qubit")
    c = _new(*qubits, *ancillas[: max(len(qubits) - 3, 0)])
    for q, v in zip(qubits, vals):
        if not v:
            c.x(q)
    if len(qubits) == 1:
        c.z(qubits[0])
    else:
        t = qubits[-1]
        c.h(t)
        c.extend(mcx(qubits[:-1], t, ancillas, variant).circuit)
        c.h(t)
    for q, v in zip(qubits, vals):
        if not v:
            c.x(q)
    return SynthesisedBlock(c, f"C^{len(qubits) - 1}Z", wires=tuple(qubits))


# accumulator arithmetic ---------------------------------------------------------

def increment(register: Sequence[int], controls: Sequence[int] = (),
              ancillas: Sequence[int] = ()) -> SynthesisedBlock:
    """``|s> -> |s + 1 mod 2^m>``; ``register[0]`` is the least significant bit.

    Bit ``j`` flips when all lower bits (and every control) are one, so the
    ladder runs from the most significant bit down.
    """
    register = list(register)
    if not register:
        raise ValueError("increment needs a non-empty register")
    controls = list(controls)
    c = _new(*register, *controls, *ancillas)
    for j in reversed(range(len(register))):
        c.extend(mcx(controls + register[:j], register[j], ancillas).circuit)
    return SynthesisedBlock(c, "INC", wires=tuple(register))


def cut_suboracle(a: int, b: int, accumulator: Sequence[int], flag: int,
                  ancillas: Sequence[int] = ()) -> SynthesisedBlock:
    """Add ``a XOR b`` to the accumulator; the flag qubit starts and ends in |0>."""
    c = _new(a, b, flag, *accumulator, *ancillas)
    c.cx(a, flag)
    c.cx(b, flag)
    c.extend(increment(accumulator, [flag], ancillas).circuit)
    c.cx(b, flag)
    c.cx(a, flag)
    return SynthesisedBlock(c, "S += A xor B", wires=(a, b, *accumulator))


def subcube_cover(t: int, m: int) -> list[dict[int, int]]:
    """Disjoint subcubes whose union is ``{s : t <= s < 2**m}``.

    Each cube is ``{bit: value}`` for its fixed bits. Scanning from the
    most significant bit, every zero bit of ``t`` above its lowest set bit
    contributes the cube "same prefix, this bit 1"; the final cube fixes
    the prefix down to that lowest set bit.
    """
    if not 0 <= t <= (1 << m) - 1:
        raise ValueError(f"threshold {t} outside [0, {(1 << m) - 1}]")
    if t == 0:
        return [{}]
    low = (t & -t).bit_length() - 1
    cubes = []
    for j in reversed(range(low + 1, m)):
        if not (t >> j) & 1:
            cube = {k: (t >> k) & 1 for k in range(j + 1, m)}
            cube[j] = 1
            cubes.append(cube)
    cubes.append({k: (t >> k) & 1 for k in range(low, m)})
    return cubes


def pshift(t: int, accumulator: Sequence[int], ancillas: Sequence[int] = ()) -> SynthesisedBlock:
    """Diagonal sign flip of every accumulator value ``s >= t``."""
    acc = list(accumulator)
    cubes = subcube_cover(t, len(acc))
    c = _new(*acc, *ancillas)
    gphase = 0.0
    for cube in cubes:
        if not cube:
            gphase = PI
            continue
        bits = sorted(cube, reverse=True)
        c.extend(mcz([acc[j] for j in bits], [cube[j] for j in bits], ancillas).circuit)
    return SynthesisedBlock(c, f"Pshift({t})", global_phase=gphase, wires=tuple(acc))


def diffusion(data: Sequence[int], ancillas: Sequence[int] = (), variant: str = "iX",
              swap: bool = True) -> SynthesisedBlock:
    """Inversion about the mean on ``data`` (global phase pi recorded).

    ``H X`` / ``X H`` pairs around the multi-controlled core are written as
    ``Z H`` / ``H Z``; on the target the Hadamards collapse to a single Z.
    For three or more qubits the core builds in a SWAP of the last two data
    qubits, reported through ``permutation``.
    """
    data = list(data)
    n = len(data)
    if n < 1:
        raise ValueError("diffusion needs at least one qubit")
    c = _new(*data, *ancillas)
    if n == 1:
        c.x(data[0])  # 2|+><+| - 1 = X
        return SynthesisedBlock(c, "D", wires=tuple(data))
    controls, target = data[:-1], data[-1]
    for q in controls:
        c.z(q)
        c.h(q)
    c.z(target)
    core = mcx(controls, target, ancillas, variant, swap=swap and n >= 3)
    c.extend(core.circuit)
    out = core.output_wires()
    for q in out[:-1]:
        c.h(q)
        c.z(q)
    c.z(out[-1])
    sem = "D" + (" then SWAP(d[-2], d[-1])" if core.permutation != tuple(range(n)) else "")
    return SynthesisedBlock(c, sem, global_phase=PI, wires=tuple(data), permutation=core.permutation)


# macro lowering -------------------------------------------------------------------

def lower(circuit: Circuit, ancillas: Sequence[int] = (), variant: str = "iX") -> Circuit:
    """Replace every macro gate by its {u1, u2, u3, cx} realisation.

    ``ancillas`` is a pool of qubits guaranteed to be |0> wherever an
    ``mcx``/``mcz`` macro with three or more controls appears.
    """
    out = Circuit(circuit.n_qubits, labels=dict(circuit.labels))
    for g in circuit.gates:
        out.extend(_lower_gate(g, ancillas, variant).gates)
    return out


def _lower_gate(g: Gate, ancillas: Sequence[int], variant: str) -> Circuit:
    q = g.qubits
    if g.is_primitive:
        return Circuit(max(q) + 1, [g])
    pool = [a for a in ancillas if a not in q]
    if g.name == "ccx":
        return toffoli_6cx(*q).circuit
    if g.name == "toffoli_swap":
        return toffoli_swap(*q).circuit
    if g.name in ("rtof_ix", "rtof_ix_dg"):
        return rtof_ix(*q, dagger=g.name.endswith("_dg")).circuit
    if g.name in ("rtof_m", "rtof_m_dg"):
        return rtof_m(*q, dagger=g.name.endswith("_dg")).circuit
    if g.name == "cp":
        return crz(g.params[0], *q, symmetric=True).circuit
    if g.name == "mcx":
        return mcx(q[:-1], q[-1], pool, variant, ctrl_state=g.ctrl_state).circuit
    if g.name == "mcz":
        return mcz(q, g.ctrl_state, pool, variant).circuit
    raise ValueError(f"no lowering for {g.name!r}")
