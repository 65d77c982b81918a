"""Ideal and trajectory-noisy simulation of lowered circuits."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..circuit import Circuit, InvalidCircuitError
from . import kernels
from .noise import NoiseModel

# Shots are grouped into fixed blocks; block b draws from Philox keyed by
# the seed with counter word 1 = b, so any shot's randomness depends only
# on (seed, shot index) and never on scheduling or chunking.
RNG_SCHEME = "philox4x64/block-1024/v1"
SHOT_BLOCK = 1024


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([
        [c, -np.exp(1j * lam) * s],
        [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
    ], dtype=np.complex128)


def gate_matrix(name: str, params: Sequence[float]) -> np.ndarray:
    if name == "u1":
        return np.array([[1, 0], [0, np.exp(1j * params[0])]], dtype=np.complex128)
    if name == "u2":
        return u3_matrix(math.pi / 2, params[0], params[1])
    if name == "u3":
        return u3_matrix(*params)
    raise ValueError(f"{name} is not a single-qubit primitive")


@dataclass
class Program:
    n_qubits: int
    kinds: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    mats: np.ndarray
    perr: np.ndarray


def compile_circuit(circuit: Circuit, noise: NoiseModel | None = None) -> Program:
    if not circuit.is_lowered():
        bad = sorted({g.name for g in circuit.gates if not g.is_primitive})
        raise InvalidCircuitError(f"circuit has unlowered macro gates: {bad}")
    if noise is not None and noise.n_qubits < circuit.n_qubits:
        raise ValueError(f"noise model covers {noise.n_qubits} qubits, circuit uses {circuit.n_qubits}")
    G = len(circuit.gates)
    kinds = np.zeros(G, dtype=np.int64)
    q0 = np.zeros(G, dtype=np.int64)
    q1 = np.zeros(G, dtype=np.int64)
    mats = np.zeros((G, 2, 2), dtype=np.complex128)
    perr = np.zeros(G, dtype=np.float64)
    for i, g in enumerate(circuit.gates):
        if g.name == "cx":
            kinds[i] = kernels.KIND_CX
            q0[i], q1[i] = g.qubits
        else:
            q0[i] = g.qubits[0]
            mats[i] = gate_matrix(g.name, g.params)
        if noise is not None:
            perr[i] = noise.gate_error(g.name, g.qubits)
    return Program(circuit.n_qubits, kinds, q0, q1, mats, perr)


@dataclass
class StateVector:
    """``2**n`` amplitudes; basis index bit ``q`` is qubit ``q``."""

    n_qubits: int
    amplitudes: np.ndarray

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real * a.real + a.imag * a.imag

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def bitstring(index: int, n: int) -> str:
    """Printed outcome: qubit 0 leftmost."""
    return "".join(str((index >> q) & 1) for q in range(n))


def bitstring_index(bits: str) -> int:
    return sum(int(c) << q for q, c in enumerate(bits))


def run_ideal(circuit: Circuit, initial: StateVector | None = None,
              backend: str | None = None) -> StateVector:
    prog = compile_circuit(circuit)
    if initial is None:
        state = np.zeros((1, 1 << prog.n_qubits), dtype=np.complex128)
        state[0, 0] = 1.0
    else:
        if initial.n_qubits != circuit.n_qubits:
            raise ValueError("initial state size does not match circuit")
        state = initial.amplitudes.astype(np.complex128).reshape(1, -1).copy()
    kernels.run_gates(state, prog.kinds, prog.q0, prog.q1, prog.mats, backend=backend)
    return StateVector(prog.n_qubits, state[0])


def circuit_unitary(circuit: Circuit, backend: str | None = None) -> np.ndarray:
    """Full ``2**n x 2**n`` unitary, column ``j`` = image of basis state ``j``."""
    prog = compile_circuit(circuit)
    dim = 1 << prog.n_qubits
    states = np.eye(dim, dtype=np.complex128)
    kernels.run_gates(states, prog.kinds, prog.q0, prog.q1, prog.mats, backend=backend)
    return states.T.copy()


def probabilities(state: StateVector, qubits: Sequence[int] | None = None) -> dict[str, float]:
    """Distribution keyed by bitstring; ``qubits`` selects and orders a marginal."""
    p = state.probabilities()
    if qubits is None:
        return {bitstring(i, state.n_qubits): float(p[i]) for i in range(p.size)}
    qubits = list(qubits)
    idx = np.arange(p.size)
    sub = np.zeros(p.size, dtype=np.int64)
    for k, q in enumerate(qubits):
        sub |= ((idx >> q) & 1) << k
    marg = np.bincount(sub, weights=p, minlength=1 << len(qubits))
    return {bitstring(i, len(qubits)): float(marg[i]) for i in range(marg.size)}


def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def shot_streams(seed: int, shots: int, n_read: int, n_gate_u: int
                 ) -> Iterator[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(first_shot, u_meas, u_read, u_gate)`` per shot block.

    Measurement, readout and gate uniforms are drawn as separate arrays in
    that fixed order, so the measurement draw of a shot does not depend on
    how many gates the circuit has.
    """
    key = _philox_key(seed)
    for block, start in enumerate(range(0, shots, SHOT_BLOCK)):
        bg = np.random.Philox(key=key, counter=np.array([0, block, 0, 0], dtype=np.uint64))
        gen = np.random.Generator(bg)
        u_meas = gen.random(SHOT_BLOCK)
        u_read = gen.random((SHOT_BLOCK, max(n_read, 1)))
        u_gate = gen.random((SHOT_BLOCK, max(n_gate_u, 1)))
        take = min(SHOT_BLOCK, shots - start)
        yield start, u_meas[:take], u_read[:take], u_gate[:take]


def _tally(indices: np.ndarray, n: int) -> dict[str, int]:
    counts = np.bincount(indices, minlength=1 << n)
    return {bitstring(i, n): int(c) for i, c in enumerate(counts) if c}


def sample(state: StateVector, shots: int, seed: int, backend: str | None = None) -> dict[str, int]:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    out = []
    for _, u_meas, _, _ in shot_streams(seed, shots, 0, 0):
        out.append(kernels.sample_indices(state.amplitudes, u_meas, backend=backend))
    return _tally(np.concatenate(out), state.n_qubits)


def run_noisy(circuit: Circuit, noise: NoiseModel, shots: int, seed: int,
              initial: StateVector | None = None, backend: str | None = None) -> dict[str, int]:
    """Pauli-trajectory simulation: one statevector per shot.

    After every gate a uniformly random non-identity Pauli (15 for CX) is
    applied with that gate's error rate; each measured bit then flips with
    its readout error.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    prog = compile_circuit(circuit, noise)
    n = prog.n_qubits
    if initial is None:
        init = np.zeros(1 << n, dtype=np.complex128)
        init[0] = 1.0
    else:
        init = initial.amplitudes.astype(np.complex128).copy()
    readout = np.ascontiguousarray(noise.readout_error[:n], dtype=np.float64)
    out = []
    for _, u_meas, u_read, u_gate in shot_streams(seed, shots, n, 2 * len(prog.kinds)):
        out.append(kernels.noisy_block(init, prog.kinds, prog.q0, prog.q1, prog.mats, prog.perr,
                                       readout, u_meas, np.ascontiguousarray(u_read),
                                       np.ascontiguousarray(u_gate), backend=backend))
    return _tally(np.concatenate(out), n)


def marginal_counts(counts: dict[str, int], qubits: Sequence[int]) -> dict[str, int]:
    out: Counter = Counter()
    for key, c in counts.items():
        out["".join(key[q] for q in qubits)] += c
    return dict(out)


def normalize(counts: dict[str, int]) -> dict[str, float]:
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()}


def counts_to_json(counts: dict[str, int]) -> str:
    return json.dumps({"shots": sum(counts.values()), "counts": dict(sorted(counts.items()))})


def counts_from_json(text: str) -> dict[str, int]:
    data = json.loads(text)
    counts = {k: int(v) for k, v in data["counts"].items()}
    if sum(counts.values()) != data["shots"]:
        raise ValueError("counts do not sum to shots")
    return counts
