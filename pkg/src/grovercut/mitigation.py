"""Readout-error mitigation, divergences and the ``m*d`` feasibility rule."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit, cx_depth
from .sim import NoiseModel, bitstring, run_noisy

KL_SMOOTHING = 1e-9
# above this condition number the solve is flagged in the result warnings
ILL_CONDITIONED = 1e8


@dataclass
class CalibrationMatrix:
    """Column ``j`` is the observed distribution after preparing basis state ``j``.

    Rows and columns follow basis index order (qubit 0 least significant).
    """

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        dim = 1 << self.n_qubits
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"calibration matrix must be {dim}x{dim}")
        if (self.matrix < 0).any():
            raise ValueError("calibration matrix has negative entries")
        if not np.allclose(self.matrix.sum(axis=0), 1.0, atol=1e-9):
            raise ValueError("calibration matrix columns must sum to 1")

    def to_json(self) -> dict:
        return {"schema": 1, "n_qubits": self.n_qubits, "matrix": self.matrix.tolist()}

    @classmethod
    def from_json(cls, data: dict | str) -> "CalibrationMatrix":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["n_qubits"]), np.array(data["matrix"]))


def _seed_for(seed: int, j: int) -> int:
    return int(np.random.SeedSequence([seed, j]).generate_state(1, np.uint32)[0])


def build_calibration_matrix(noise: NoiseModel, n_qubits: int, shots: int, seed: int,
                             gate_noise: bool = False) -> CalibrationMatrix:
    """Prepare every basis state with X gates and measure ``shots`` times.

    By default only readout errors act, so the matrix isolates measurement
    error; ``gate_noise`` keeps the preparation gates noisy as well.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if n_qubits > noise.n_qubits:
        raise ValueError(f"noise model covers {noise.n_qubits} qubits, asked for {n_qubits}")
    model = noise if gate_noise else noise.readout_only()
    dim = 1 << n_qubits
    mat = np.zeros((dim, dim))
    for j in range(dim):
        prep = Circuit(n_qubits)
        for q in range(n_qubits):
            if (j >> q) & 1:
                prep.x(q)
        counts = run_noisy(prep, model, shots, _seed_for(seed, j))
        col = dist_vector(counts, n_qubits)
        mat[:, j] = col / col.sum()
    return CalibrationMatrix(n_qubits, mat)


def dist_vector(dist: Mapping[str, float] | np.ndarray, n_qubits: int) -> np.ndarray:
    """Bitstring-keyed counts or probabilities as a basis-ordered float vector."""
    if isinstance(dist, np.ndarray):
        if dist.shape != (1 << n_qubits,):
            raise ValueError("distribution vector has the wrong length")
        return dist.astype(float)
    vec = np.zeros(1 << n_qubits)
    for key, v in dist.items():
        if len(key) != n_qubits:
            raise ValueError(f"outcome {key!r} does not have {n_qubits} bits")
        vec[sum(int(c) << q for q, c in enumerate(key))] += v
    return vec


def vector_dist(vec: np.ndarray, n_qubits: int) -> dict[str, float]:
    return {bitstring(i, n_qubits): float(v) for i, v in enumerate(vec)}


@dataclass
class MitigatedResult:
    raw: dict[str, float]
    mitigated: dict[str, float]
    residual: float
    warnings: list[str] = field(default_factory=list)


def _simplex_lstsq(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``argmin ||M p - b||`` over the probability simplex.

    NNLS handles ``p >= 0``; the sum constraint enters as a heavily
    weighted extra row and an SLSQP polish enforces it exactly.
    """
    from scipy.optimize import minimize, nnls

    dim = M.shape[1]
    w = 1e3 * max(1.0, float(np.abs(M).max()))
    A = np.vstack([M, w * np.ones((1, dim))])
    p, _ = nnls(A, np.append(b, w), maxiter=50 * dim)
    p = np.clip(p, 0.0, None)
    p = p / p.sum() if p.sum() > 0 else np.full(dim, 1.0 / dim)
    if abs(p.sum() - 1.0) > 1e-12 or np.linalg.norm(M @ p - b) > 1e-10:
        res = minimize(lambda x: 0.5 * np.sum((M @ x - b) ** 2), p,
                       jac=lambda x: M.T @ (M @ x - b), method="SLSQP",
                       bounds=[(0.0, 1.0)] * dim,
                       constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0,
                                     "jac": lambda x: np.ones_like(x)}],
                       options={"ftol": 1e-15, "maxiter": 500})
        if res.success and res.fun <= 0.5 * np.sum((M @ p - b) ** 2):
            p = np.clip(res.x, 0.0, None)
            p = p / p.sum()
    return p


def mitigate(cal: CalibrationMatrix, raw: Mapping[str, float] | np.ndarray) -> MitigatedResult:
    """Constrained least-squares unfolding of a measured distribution."""
    n = cal.n_qubits
    b = dist_vector(raw, n)
    total = b.sum()
    if total <= 0:
        raise ValueError("raw distribution is empty")
    b = b / total
    warnings = []
    cond = np.linalg.cond(cal.matrix)
    if not math.isfinite(cond) or cond > ILL_CONDITIONED:
        warnings.append(f"calibration matrix ill-conditioned (cond={cond:.3g}); constrained solve used")
    p = _simplex_lstsq(cal.matrix, b)
    residual = float(np.linalg.norm(cal.matrix @ p - b))
    return MitigatedResult(vector_dist(b, n), vector_dist(p, n), residual, warnings)


def _aligned(p: Mapping[str, float], q: Mapping[str, float]) -> tuple[np.ndarray, np.ndarray]:
    keys = sorted(set(p) | set(q))
    a = np.array([p.get(k, 0.0) for k in keys], dtype=float)
    b = np.array([q.get(k, 0.0) for k in keys], dtype=float)
    return a / a.sum(), b / b.sum()


def kl_divergence(p: Mapping[str, float], q: Mapping[str, float], base: float = math.e,
                  smoothing: float = KL_SMOOTHING) -> float:
    """``sum p log(p / q)``; ``q`` gets additive smoothing so zeros stay finite."""
    a, b = _aligned(p, q)
    b = (b + smoothing) / (1.0 + smoothing * b.size)
    mask = a > 0
    val = float(np.sum(a[mask] * np.log(a[mask] / b[mask])))
    return max(val, 0.0) / math.log(base)


def total_variation(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    a, b = _aligned(p, q)
    return float(0.5 * np.abs(a - b).sum())


def feasibility_report(circuit: Circuit, noise: NoiseModel | None = None,
                       eps_eff: float | None = None) -> dict:
    """Compare ``m*d`` against ``1/eps_eff``; reaching the bound counts as infeasible.

    ``eps_eff`` defaults to the mean CX error over the edges the circuit uses.
    """
    if eps_eff is None:
        eps_eff = noise.mean_cx_error(circuit.cx_pairs()) if noise is not None else 0.0
    if eps_eff < 0:
        raise ValueError("eps_eff must be >= 0")
    m = len(circuit.touched_qubits())
    d = cx_depth(circuit)
    bound = math.inf if eps_eff == 0 else 1.0 / eps_eff
    return {"m": m, "d": d, "md": m * d, "eps_eff": eps_eff,
            "inv_eps_eff": bound, "feasible": m * d < bound}


def analysis_report(ideal: Mapping[str, float], raw: Mapping[str, float],
                    mitigated: Mapping[str, float], residual: float) -> dict:
    """KL of the ideal distribution against the mitigated one, plus TV before and after."""
    kl = kl_divergence(ideal, mitigated)
    return {
        "kl_nats": kl,
        "kl_bits": kl / math.log(2),
        "tv_raw": total_variation(raw, ideal),
        "tv_mitigated": total_variation(mitigated, ideal),
        "residual": residual,
    }
