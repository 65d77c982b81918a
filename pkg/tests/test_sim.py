import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grovercut.circuit import Circuit, InvalidCircuitError
from grovercut.sim import (
    NoiseModel, StateVector, bitstring, bitstring_index, circuit_unitary, compile_circuit, kernels,
    load_noise, marginal_counts, noise_preset, normalize, probabilities, run_ideal, run_noisy, sample,
)
from grovercut.sim.statevector import counts_from_json, counts_to_json

BACKENDS = sorted(kernels.IMPLEMENTATIONS)


def random_circuit(n, depth, seed):
    rng = np.random.default_rng(seed)
    c = Circuit(n)
    for _ in range(depth):
        q = int(rng.integers(n))
        kind = rng.integers(4)
        if kind == 0:
            c.u1(rng.uniform(-3, 3), q)
        elif kind == 1:
            c.u2(*rng.uniform(-3, 3, 2), q)
        elif kind == 2:
            c.u3(*rng.uniform(-3, 3, 3), q)
        else:
            c.cx(q, int((q + 1 + rng.integers(n - 1)) % n))
    return c


def dense_reference(c: Circuit) -> np.ndarray:
    """Kronecker-product reference simulator, independent of the kernels."""
    from grovercut.sim.statevector import gate_matrix

    n = c.n_qubits
    u = np.eye(1 << n, dtype=complex)
    for g in c.gates:
        if g.name == "cx":
            a, b = g.qubits
            m = np.zeros((1 << n, 1 << n))
            for j in range(1 << n):
                m[j ^ (((j >> a) & 1) << b), j] = 1
        else:
            m = np.array([[1.0]])
            for q in reversed(range(n)):
                m = np.kron(m, gate_matrix(g.name, g.params) if q == g.qubits[0] else np.eye(2))
        u = m @ u
    return u


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("seed", range(4))
def test_unitary_matches_dense_reference(backend, seed):
    c = random_circuit(4, 30, seed)
    assert np.allclose(circuit_unitary(c, backend=backend), dense_reference(c), atol=1e-10)


def test_backends_agree_on_states():
    c = random_circuit(5, 60, 11)
    states = [run_ideal(c, backend=b).amplitudes for b in BACKENDS]
    assert all(np.allclose(s, states[0], atol=1e-12) for s in states)


def test_state_norm_preserved():
    s = run_ideal(random_circuit(6, 80, 2))
    assert abs(s.norm() - 1) < 1e-12


def test_bitstring_convention():
    assert bitstring(1, 3) == "100"
    assert bitstring_index("001") == 4
    s = run_ideal(Circuit(3).x(0))
    assert probabilities(s)["100"] == pytest.approx(1.0)
    assert probabilities(s, [2, 0]) == pytest.approx({"00": 0.0, "10": 0.0, "01": 1.0, "11": 0.0}, abs=1e-12)


def test_initial_state_and_fidelity():
    init = StateVector.basis(2, 3)
    out = run_ideal(Circuit(2).cx(0, 1), initial=init)
    assert out.fidelity(StateVector.basis(2, 1)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        run_ideal(Circuit(3), initial=init)


def test_macros_rejected():
    c = Circuit(3)
    c.macro("ccx", (0, 1, 2))
    with pytest.raises(InvalidCircuitError):
        compile_circuit(c)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sampling_deterministic_and_seeded(backend):
    s = run_ideal(Circuit(3).h(0).h(1).cx(1, 2))
    a = sample(s, 5000, seed=4, backend=backend)
    assert a == sample(s, 5000, seed=4, backend=backend)
    assert a != sample(s, 5000, seed=5, backend=backend)
    assert set(a) <= {"000", "100", "011", "111"}
    assert sum(a.values()) == 5000


def test_sampling_backends_identical():
    s = run_ideal(random_circuit(4, 40, 9))
    outs = [sample(s, 20000, seed=1, backend=b) for b in BACKENDS]
    assert all(o == outs[0] for o in outs)


def test_noisy_backends_identical():
    c = random_circuit(4, 40, 8)
    nz = NoiseModel.uniform(4, 0.01, 0.02, 0.03, 0.05)
    outs = [run_noisy(c, nz, 5000, seed=2, backend=b) for b in BACKENDS]
    assert all(o == outs[0] for o in outs)


def test_zero_noise_matches_sampling():
    c = random_circuit(4, 40, 5)
    assert run_noisy(c, NoiseModel.ideal(4), 3000, seed=7) == sample(run_ideal(c), 3000, seed=7)


def test_shot_blocks_are_prefix_stable():
    # the first block of a longer run is the same draws as a shorter run
    c = Circuit(1).h(0)
    nz = NoiseModel.ideal(1)
    short = run_noisy(c, nz, 1024, seed=3)
    from grovercut.sim.statevector import shot_streams
    u_long = next(shot_streams(3, 4096, 1, 2))[1]
    u_short = next(shot_streams(3, 1024, 1, 2))[1]
    assert np.array_equal(u_long, u_short)
    assert sum(short.values()) == 1024


def test_readout_flip_rate_within_3_sigma():
    r, shots = 0.07, 100_000
    counts = run_noisy(Circuit(1), NoiseModel.uniform(1, readout=r), shots, seed=0)
    p = counts.get("1", 0) / shots
    assert abs(p - r) < 3 * math.sqrt(r * (1 - r) / shots)


def test_depolarizing_rate_single_qubit():
    # a Pauli after X flips the outcome for X or Y (2 of 3 choices)
    e, shots = 0.09, 100_000
    counts = run_noisy(Circuit(1).x(0), NoiseModel.uniform(1, u3=e), shots, seed=1)
    p = counts.get("0", 0) / shots
    want = 2 * e / 3
    assert abs(p - want) < 3 * math.sqrt(want * (1 - want) / shots)


def test_cx_noise_rate():
    # 15 non-identity Paulis; outcome of |00> changes unless the Pauli is diagonal (Z/I parts): 3 of 15 keep it
    e, shots = 0.15, 100_000
    counts = run_noisy(Circuit(2).cx(0, 1), NoiseModel.uniform(2, cx=e), shots, seed=2)
    p = 1 - counts.get("00", 0) / shots
    want = e * 12 / 15
    assert abs(p - want) < 3 * math.sqrt(want * (1 - want) / shots)


def test_u1_is_noiseless():
    nz = NoiseModel.uniform(1, 0.5, 0.5, 0.0, 0.5)
    assert nz.gate_error("u1", (0,)) == 0.0
    assert run_noisy(Circuit(1).u1(1.0, 0), nz, 2000, seed=0) == {"0": 2000}


def test_noise_model_validation_and_presets():
    with pytest.raises(ValueError):
        NoiseModel.uniform(2, readout=0.7)
    with pytest.raises(ValueError):
        NoiseModel([0.0], [0.0, 0.0], [0.0])
    a = noise_preset("ourense")
    assert a.name == "preset-a" and a.n_qubits == 5
    assert a.gate_error("cx", (1, 0)) == pytest.approx(7.22e-3)
    assert a.gate_error("cx", (0, 4)) == pytest.approx(a.default_cx_error)
    assert a.mean_cx_error([(0, 1), (1, 0), (3, 4)]) == pytest.approx((7.22e-3 + 7.35e-3) / 2)
    assert NoiseModel.from_json(a.to_json()).to_json() == a.to_json()
    assert load_noise("valencia").name == "preset-b"
    assert load_noise("none").readout_error.sum() == 0
    with pytest.raises(ValueError):
        noise_preset("melbourne")


def test_noise_too_small_for_circuit():
    with pytest.raises(ValueError):
        run_noisy(Circuit(6), noise_preset("preset-a"), 10, seed=0)


def test_counts_helpers():
    counts = {"010": 3, "110": 1}
    assert marginal_counts(counts, [1]) == {"1": 4}
    assert normalize(counts) == {"010": 0.75, "110": 0.25}
    assert counts_from_json(counts_to_json(counts)) == counts


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3000))
def test_sample_total_and_support(seed, shots):
    s = run_ideal(Circuit(2).h(0))
    c = sample(s, shots, seed)
    assert sum(c.values()) == shots and set(c) <= {"00", "10"}


@pytest.mark.parametrize("value,expected", [("numpy", "numpy"), ("numba", "numba")])
def test_backend_env_flag(value, expected):
    env = dict(os.environ, GROVERCUT_BACKEND=value)
    out = subprocess.run([sys.executable, "-c", "from grovercut.sim import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_backend_env_flag_rejects_unknown():
    env = dict(os.environ, GROVERCUT_BACKEND="cuda")
    out = subprocess.run([sys.executable, "-c", "import grovercut.sim"], env=env,
                         capture_output=True, text=True)
    assert out.returncode != 0 and "GROVERCUT_BACKEND" in out.stderr
