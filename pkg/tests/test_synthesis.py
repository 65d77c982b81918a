import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bit, clean_columns, equal_up_to_phase, permutation_matrix, swap_bits, unitary
from grovercut.circuit import Circuit
from grovercut.synthesis import (
    SynthesisError, approx_sub_oracle_2cx, cnx, crz, cut_suboracle, diffusion, increment, lower, mcx,
    mcz, pshift, rtof_ix, rtof_m, sub_oracle_phase, subcube_cover, toffoli_6cx, toffoli_swap,
)

PI = math.pi
thetas = st.floats(0.0, PI, allow_nan=False)


def ccx_map(c0, c1, t):
    return lambda j: j ^ ((bit(j, c0) & bit(j, c1)) << t)


@settings(max_examples=30, deadline=None)
@given(thetas)
def test_crz_conventions(theta):
    e = np.exp
    # control on qubit 0 (least significant): index = c + 2 t
    assert np.allclose(unitary(crz(theta, 0, 1).circuit), np.diag([1, 1, 1, e(1j * theta)]), atol=1e-12)
    want = np.diag([1, e(-0.5j * theta), 1, e(0.5j * theta)])
    assert np.allclose(unitary(crz(theta, 0, 1, symmetric=False).circuit), want, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(thetas)
def test_sub_oracle_phase(theta):
    blk = sub_oracle_phase(theta, 0, 1)
    ph = np.exp(1j * theta)
    assert np.allclose(unitary(blk.circuit), np.diag([1, ph, ph, 1]), atol=1e-12)
    assert blk.cx_count == 4


@pytest.mark.parametrize("qubits", [(0, 1, 2), (2, 0, 1), (1, 2, 0)])
def test_toffoli_6cx(qubits):
    blk = toffoli_6cx(*qubits)
    assert blk.cx_count == 6
    assert np.allclose(unitary(blk.circuit, 3), permutation_matrix(3, ccx_map(*qubits)), atol=1e-12)


@pytest.mark.parametrize("qubits", [(0, 1, 2), (2, 1, 0), (1, 0, 2)])
def test_toffoli_swap(qubits):
    c0, c1, t = qubits
    blk = toffoli_swap(c0, c1, t)
    assert blk.cx_count == 7
    ref = permutation_matrix(3, lambda j: swap_bits(ccx_map(c0, c1, t)(j), c1, t))
    assert np.allclose(unitary(blk.circuit, 3), ref, atol=1e-12)
    # only the two line edges c0-c1 and c1-t carry CX
    assert {frozenset(p) for p in blk.circuit.cx_pairs()} == {frozenset((c0, c1)), frozenset((c1, t))}
    assert blk.output_wires() == (c0, t, c1)


def rtof_ix_reference():
    # basis index = c0 + 2 c1 + 4 t
    m = np.eye(8, dtype=complex)
    m[5, 5] = -1           # c0=1, c1=0, t=1
    m[:, 3] = 0
    m[:, 7] = 0
    m[7, 3] = 1j           # |c0=1,c1=1,t=0> -> i |..t=1>
    m[3, 7] = -1j
    return m


def test_rtof_ix_matrix():
    blk = rtof_ix(0, 1, 2)
    assert blk.cx_count == 3 and blk.relative_phase
    assert np.allclose(unitary(blk.circuit), rtof_ix_reference(), atol=1e-12)
    assert blk.circuit.count("u1") == 4 and blk.circuit.count("u2") == 2


def test_rtof_m_flips_only_101():
    u = unitary(rtof_m(0, 1, 2).circuit)
    ccx = permutation_matrix(3, ccx_map(0, 1, 2))
    signs = np.ones(8)
    signs[0b101] = -1  # c0=1, c1=0, t=1
    assert np.allclose(u, ccx * signs[None, :], atol=1e-12)
    assert rtof_m(0, 1, 2).cx_count == 3


@pytest.mark.parametrize("builder", [rtof_ix, rtof_m])
def test_rtof_dagger(builder):
    u = unitary(builder(0, 1, 2).circuit)
    ud = unitary(builder(0, 1, 2, dagger=True).circuit)
    assert np.allclose(ud @ u, np.eye(8), atol=1e-12)


@pytest.mark.parametrize("builder", [rtof_ix, rtof_m])
def test_rtof_unitaries_are_involutions(builder):
    # both phase patterns are Hermitian, so the reversed gate list is the same operator
    u = unitary(builder(0, 1, 2).circuit)
    assert np.allclose(u @ u, np.eye(8), atol=1e-12)


@pytest.mark.parametrize("k", [3, 4, 5])
@pytest.mark.parametrize("swap", [False, True])
@pytest.mark.parametrize("variant", ["iX", "M"])
def test_mcx_ladder(k, swap, variant):
    controls, target = list(range(k)), k
    anc = list(range(k + 1, 2 * k - 1))
    n = 2 * k - 1
    blk = mcx(controls, target, anc, variant, swap=swap)
    assert blk.cx_count == 6 * (k - 2) + (7 if swap else 6)

    def f(j):
        hit = all(bit(j, q) for q in controls)
        j = j ^ (hit << target)
        return swap_bits(j, controls[-1], target) if swap else j

    cols = clean_columns(n, anc)
    # exact (no stray phase) on every clean-ancilla input, ancillas returned to |0>
    assert np.allclose(unitary(blk.circuit, n)[:, cols], permutation_matrix(n, f)[:, cols], atol=1e-9)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_cnx_cx_count(n):
    blk = cnx(n, list(range(n + 1)), list(range(n + 1, 2 * n - 1)))
    assert blk.cx_count == 6 * n - 5


def test_cnx_argument_checks():
    with pytest.raises(ValueError):
        cnx(2, [0, 1, 2], [])
    with pytest.raises(ValueError):
        cnx(3, [0, 1, 2, 3], [])
    with pytest.raises(SynthesisError):
        mcx([0, 1, 2, 3], 4, [5])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=4))
def test_mcz_open_controls(values):
    k = len(values)
    qubits = list(range(k))
    anc = list(range(k, k + max(k - 3, 0)))
    n = k + len(anc)
    u = unitary(mcz(qubits, values, anc).circuit, n)
    diag = [(-1 if all(bit(j, q) == v for q, v in zip(qubits, values)) else 1) for j in range(1 << n)]
    cols = clean_columns(n, anc)
    assert np.allclose(u[:, cols], np.diag(diag)[:, cols], atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=3), st.booleans())
def test_mcx_open_controls(values, swap):
    k = len(values)
    controls, target = list(range(k)), k
    anc = list(range(k + 1, k + 1 + max(k - 2, 0)))
    n = k + 1 + len(anc)
    blk = mcx(controls, target, anc, ctrl_state=values, swap=swap)

    def f(j):
        hit = all(bit(j, q) == v for q, v in zip(controls, values))
        j = j ^ (hit << target)
        return swap_bits(j, controls[-1], target) if swap else j

    cols = clean_columns(n, anc)
    assert np.allclose(unitary(blk.circuit, n)[:, cols], permutation_matrix(n, f)[:, cols], atol=1e-9)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_increment(m):
    reg, ctl = list(range(m)), [m]
    anc = list(range(m + 1, m + 1 + max(m - 2, 0)))
    n = m + 1 + len(anc)
    mask = (1 << m) - 1

    def f(j):
        if not bit(j, m):
            return j
        return (j & ~mask) | (((j & mask) + 1) & mask)

    cols = clean_columns(n, anc)
    assert np.allclose(unitary(increment(reg, ctl, anc).circuit, n)[:, cols],
                       permutation_matrix(n, f)[:, cols], atol=1e-9)


def test_cut_suboracle_adds_xor():
    # qubits: a=0, b=1, accumulator 2..3, flag 4
    n = 5
    blk = cut_suboracle(0, 1, [2, 3], 4)

    def f(j):
        s = (j >> 2) & 3
        s = (s + (bit(j, 0) ^ bit(j, 1))) & 3
        return (j & 0b10011) | (s << 2)

    cols = clean_columns(n, [4])
    assert np.allclose(unitary(blk.circuit, n)[:, cols], permutation_matrix(n, f)[:, cols], atol=1e-9)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_pshift_exhaustive(m):
    acc = list(range(m))
    anc = list(range(m, m + max(m - 3, 0)))
    n = m + len(anc)
    for t in range(1 << m):
        blk = pshift(t, acc, anc)
        u = unitary(blk.circuit, n) * np.exp(1j * blk.global_phase)
        diag = [-1 if (j & ((1 << m) - 1)) >= t else 1 for j in range(1 << n)]
        cols = clean_columns(n, anc)
        assert np.allclose(u[:, cols], np.diag(diag)[:, cols], atol=1e-9), t


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, (1 << m) - 1))))
def test_subcube_cover_partitions_suffix(mt):
    m, t = mt
    cubes = subcube_cover(t, m)
    assert len(cubes) <= m
    hits = np.zeros(1 << m, dtype=int)
    for cube in cubes:
        for s in range(1 << m):
            if all(bit(s, b) == v for b, v in cube.items()):
                hits[s] += 1
    assert np.array_equal(hits, (np.arange(1 << m) >= t).astype(int))


def test_pshift_zero_is_global_phase():
    blk = pshift(0, [0, 1, 2])
    assert not blk.circuit.gates and blk.global_phase == pytest.approx(PI)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("variant", ["iX", "M"])
def test_diffusion(n, variant):
    data = list(range(n))
    anc = list(range(n, n + max(n - 3, 0)))
    width = n + len(anc)
    blk = diffusion(data, anc, variant)
    d = 1 << n
    D = 2 * np.full((d, d), 1 / d) - np.eye(d)
    ref = np.zeros((1 << width, 1 << width), dtype=complex)
    ref[:d, :d] = D
    if n >= 3:
        ref = permutation_matrix(width, lambda j: swap_bits(j, n - 2, n - 1)) @ ref
        assert blk.permutation == tuple(range(n - 2)) + (n - 1, n - 2)
    u = unitary(blk.circuit, width) * np.exp(1j * blk.global_phase)
    assert np.allclose(u[:, :d], ref[:, :d], atol=1e-9)
    assert blk.cx_count == {1: 0, 2: 1, 3: 7, 4: 13, 5: 19}[n]


def test_diffusion_without_swap():
    blk = diffusion([0, 1, 2], swap=False)
    assert blk.permutation == (0, 1, 2) and blk.cx_count == 6


def test_lower_macros_match_blocks():
    c = Circuit(6)
    c.macro("toffoli_swap", (0, 1, 2))
    c.macro("rtof_ix", (0, 1, 2))
    c.macro("rtof_ix_dg", (0, 1, 2))
    c.macro("ccx", (2, 0, 1))
    c.macro("cp", (0, 1), (0.7,))
    c.macro("mcx", (0, 1, 2, 3), ctrl_state=(1, 0, 1))
    c.macro("mcz", (1, 2, 3, 4))
    low = lower(c, ancillas=[5])
    assert low.is_lowered()
    ref = Circuit(6)
    ref.extend(toffoli_swap(0, 1, 2).circuit)
    ref.extend(toffoli_6cx(2, 0, 1).circuit)
    ref.extend(crz(0.7, 0, 1).circuit)
    ref.extend(mcx([0, 1, 2], 3, [5], ctrl_state=[1, 0, 1]).circuit)
    ref.extend(mcz([1, 2, 3, 4], None, [5]).circuit)
    cols = clean_columns(6, [5])
    assert np.allclose(unitary(low)[:, cols], unitary(ref)[:, cols], atol=1e-9)


def test_lowered_macro_inverse_round_trip():
    c = Circuit(3)
    for name in ("toffoli_swap", "rtof_ix", "rtof_m"):
        c.macro(name, (0, 1, 2))
    full = c.copy()
    full.extend(c.inverse())
    assert np.allclose(unitary(lower(full)), np.eye(8), atol=1e-9)


@pytest.mark.parametrize("theta", [PI / 4, PI / 3, 0.323 * PI, 1.0])
def test_two_cx_fit(theta):
    rep = approx_sub_oracle_2cx(theta)
    assert rep.cx_count == 2 and rep.fidelity >= 0.99
    target = np.diag([1, np.exp(1j * theta), np.exp(1j * theta), 1])
    fid = abs(np.trace(target.conj().T @ unitary(rep.circuit))) / 4
    assert fid == pytest.approx(rep.fidelity, abs=1e-9)


def test_two_cx_fit_rejects_bad_theta():
    with pytest.raises(ValueError):
        approx_sub_oracle_2cx(4.0)
