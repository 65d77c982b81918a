"""Statevector kernels with a numba path and a pure-numpy path.

The backend is picked once at import time from ``GROVERCUT_BACKEND``
(``numba`` or ``numpy``); numba is used when available and not disabled.
Both paths consume identical inputs, so seeded results agree between them.

Gate programs are flat arrays: ``kinds`` (0 = single-qubit matrix, 1 = CX),
``q0``/``q1`` operand indices, ``mats`` of shape ``(G, 2, 2)`` and the
per-gate depolarizing probability ``perr``.
"""

from __future__ import annotations

import os

import numpy as np

KIND_1Q = 0
KIND_CX = 1

PAULIS = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=np.complex128)

try:
    import numba
    from numba import njit, prange
    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is often too old; workqueue is always present
        numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_requested = os.environ.get("GROVERCUT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"GROVERCUT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


# numpy path ----------------------------------------------------------------

def _np_apply_1q(states: np.ndarray, m: np.ndarray, q: int) -> None:
    view = states.reshape(states.shape[0], -1, 2, 1 << q)
    a = view[:, :, 0, :].copy()
    b = view[:, :, 1, :]
    view[:, :, 0, :] = m[0, 0] * a + m[0, 1] * b
    view[:, :, 1, :] = m[1, 0] * a + m[1, 1] * b


def _np_apply_cx(states: np.ndarray, c: int, t: int) -> None:
    dim = states.shape[1]
    idx = np.arange(dim)
    sel = idx[((idx >> c) & 1 == 1) & ((idx >> t) & 1 == 0)]
    partner = sel | (1 << t)
    tmp = states[:, sel].copy()
    states[:, sel] = states[:, partner]
    states[:, partner] = tmp


def _np_apply_gate(states, kind, a, b, m):
    if kind == KIND_CX:
        _np_apply_cx(states, a, b)
    else:
        _np_apply_1q(states, m, a)


def np_run_gates(states: np.ndarray, kinds, q0, q1, mats) -> None:
    """Apply a gate program in place to a batch of states ``(B, 2**n)``."""
    for g in range(len(kinds)):
        _np_apply_gate(states, kinds[g], q0[g], q1[g], mats[g])


def _np_pick(states: np.ndarray, u: np.ndarray) -> np.ndarray:
    probs = states.real * states.real + states.imag * states.imag
    cum = np.cumsum(probs, axis=1)
    r = u * cum[:, -1]
    out = np.empty(len(u), dtype=np.int64)
    for s in range(len(u)):
        out[s] = np.searchsorted(cum[s], r[s], side="right")
    np.minimum(out, states.shape[1] - 1, out=out)
    return out


def np_noisy_block(init, kinds, q0, q1, mats, perr, readout, u_meas, u_read, u_gate) -> np.ndarray:
    n_shots = len(u_meas)
    states = np.repeat(init[None, :], n_shots, axis=0)
    for g in range(len(kinds)):
        _np_apply_gate(states, kinds[g], q0[g], q1[g], mats[g])
        if perr[g] <= 0.0:
            continue
        hit = np.flatnonzero(u_gate[:, 2 * g] < perr[g])
        if hit.size == 0:
            continue
        if kinds[g] == KIND_CX:
            choice = 1 + np.minimum((u_gate[hit, 2 * g + 1] * 15).astype(np.int64), 14)
        else:
            choice = 1 + np.minimum((u_gate[hit, 2 * g + 1] * 3).astype(np.int64), 2)
        for c in np.unique(choice):
            rows = hit[choice == c]
            sub = states[rows]
            if kinds[g] == KIND_CX:
                pa, pb = c % 4, c // 4
                if pa:
                    _np_apply_1q(sub, PAULIS[pa], q0[g])
                if pb:
                    _np_apply_1q(sub, PAULIS[pb], q1[g])
            else:
                _np_apply_1q(sub, PAULIS[c], q0[g])
            states[rows] = sub
    out = _np_pick(states, u_meas)
    for q in range(len(readout)):
        flip = u_read[:, q] < readout[q]
        out[flip] ^= 1 << q
    return out


def np_sample_indices(state: np.ndarray, u: np.ndarray) -> np.ndarray:
    probs = state.real * state.real + state.imag * state.imag
    cum = np.cumsum(probs)
    out = np.searchsorted(cum, u * cum[-1], side="right").astype(np.int64)
    return np.minimum(out, state.size - 1)


# numba path ----------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_apply_1q(state, m, q):
        bit = 1 << q
        m00, m01, m10, m11 = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        for i in range(state.size):
            if i & bit == 0:
                j = i | bit
                a = state[i]
                b = state[j]
                state[i] = m00 * a + m01 * b
                state[j] = m10 * a + m11 * b

    @njit(cache=True, nogil=True)
    def _nb_apply_cx(state, c, t):
        cbit = 1 << c
        tbit = 1 << t
        for i in range(state.size):
            if (i & cbit) != 0 and (i & tbit) == 0:
                j = i | tbit
                tmp = state[i]
                state[i] = state[j]
                state[j] = tmp

    @njit(cache=True, nogil=True)
    def _nb_run_one(state, kinds, q0, q1, mats):
        for g in range(kinds.size):
            if kinds[g] == KIND_CX:
                _nb_apply_cx(state, q0[g], q1[g])
            else:
                _nb_apply_1q(state, mats[g], q0[g])

    @njit(cache=True, nogil=True)
    def nb_run_gates(states, kinds, q0, q1, mats):
        for s in range(states.shape[0]):
            row = states[s].copy()
            _nb_run_one(row, kinds, q0, q1, mats)
            states[s] = row

    @njit(cache=True, nogil=True)
    def _nb_pick(state, u):
        total = 0.0
        for i in range(state.size):
            total += state[i].real * state[i].real + state[i].imag * state[i].imag
        r = u * total
        acc = 0.0
        for i in range(state.size):
            acc += state[i].real * state[i].real + state[i].imag * state[i].imag
            if acc > r:
                return i
        return state.size - 1

    @njit(cache=True, parallel=True)
    def nb_noisy_block(init, kinds, q0, q1, mats, perr, readout, u_meas, u_read, u_gate):
        n_shots = u_meas.size
        out = np.empty(n_shots, dtype=np.int64)
        paulis = PAULIS
        for s in prange(n_shots):
            st = init.copy()
            for g in range(kinds.size):
                if kinds[g] == KIND_CX:
                    _nb_apply_cx(st, q0[g], q1[g])
                else:
                    _nb_apply_1q(st, mats[g], q0[g])
                if perr[g] > 0.0 and u_gate[s, 2 * g] < perr[g]:
                    if kinds[g] == KIND_CX:
                        c = 1 + min(int(u_gate[s, 2 * g + 1] * 15), 14)
                        pa = c % 4
                        pb = c // 4
                        if pa != 0:
                            _nb_apply_1q(st, paulis[pa], q0[g])
                        if pb != 0:
                            _nb_apply_1q(st, paulis[pb], q1[g])
                    else:
                        c = 1 + min(int(u_gate[s, 2 * g + 1] * 3), 2)
                        _nb_apply_1q(st, paulis[c], q0[g])
            idx = _nb_pick(st, u_meas[s])
            for q in range(readout.size):
                if u_read[s, q] < readout[q]:
                    idx ^= 1 << q
            out[s] = idx
        return out

    @njit(cache=True)
    def nb_sample_indices(state, u):
        out = np.empty(u.size, dtype=np.int64)
        for s in range(u.size):
            out[s] = _nb_pick(state, u[s])
        return out


IMPLEMENTATIONS = {"numpy": (np_run_gates, np_noisy_block, np_sample_indices)}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = (nb_run_gates, nb_noisy_block, nb_sample_indices)


def run_gates(states, kinds, q0, q1, mats, backend: str | None = None) -> None:
    IMPLEMENTATIONS[backend or BACKEND][0](states, kinds, q0, q1, mats)


def noisy_block(*args, backend: str | None = None) -> np.ndarray:
    return IMPLEMENTATIONS[backend or BACKEND][1](*args)


def sample_indices(state, u, backend: str | None = None) -> np.ndarray:
    return IMPLEMENTATIONS[backend or BACKEND][2](state, u)
