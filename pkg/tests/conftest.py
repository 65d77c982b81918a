import numpy as np
import pytest

from grovercut.circuit import Circuit
from grovercut.graph import named_graph
from grovercut.sim import circuit_unitary


def widen(circuit: Circuit, n: int) -> Circuit:
    if circuit.n_qubits >= n:
        return circuit
    out = Circuit(n)
    out.extend(circuit)
    return out


def unitary(circuit: Circuit, n: int | None = None) -> np.ndarray:
    return circuit_unitary(widen(circuit, n or circuit.n_qubits))


def permutation_matrix(n: int, f) -> np.ndarray:
    """Reference unitary of the classical map ``|j> -> |f(j)>``."""
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        m[f(j), j] = 1.0
    return m


def bit(j: int, q: int) -> int:
    return (j >> q) & 1


def swap_bits(j: int, a: int, b: int) -> int:
    if bit(j, a) != bit(j, b):
        j ^= (1 << a) | (1 << b)
    return j


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    """``a == e^{i phi} b`` for some global phase."""
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(a[idx]) < 1e-12:
        return False
    phase = a[idx] / b[idx]
    return abs(abs(phase) - 1) < atol and np.allclose(a, phase * b, atol=atol)


def clean_columns(n: int, ancillas) -> list[int]:
    return [j for j in range(1 << n) if all(bit(j, a) == 0 for a in ancillas)]


@pytest.fixture
def k13():
    return named_graph("k13")


@pytest.fixture
def k14():
    return named_graph("k14")
