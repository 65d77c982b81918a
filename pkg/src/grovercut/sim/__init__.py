from .kernels import BACKEND
from .noise import NoiseModel, load_noise, noise_preset
from .statevector import (
    RNG_SCHEME,
    StateVector,
    bitstring,
    bitstring_index,
    circuit_unitary,
    compile_circuit,
    marginal_counts,
    normalize,
    probabilities,
    run_ideal,
    run_noisy,
    sample,
)

__all__ = [
    "BACKEND", "NoiseModel", "RNG_SCHEME", "StateVector", "bitstring", "bitstring_index",
    "circuit_unitary", "compile_circuit", "load_noise", "marginal_counts", "noise_preset",
    "normalize", "probabilities", "run_ideal", "run_noisy", "sample",
]
