"""Pulse-level simulator of an Ising spin-chain quantum computer.

Compiles the quantum Fourier transform (plain and R/G-gate variants) into
generalized 2pi-k pulse schedules, evolves state vectors exactly under the
driven chain Hamiltonian, and analyses intrinsic and GUE-induced fidelity loss.
"""

__version__ = "0.1.0"

from .chain import ChainParams, larmor_frequency, static_hamiltonian_diagonal, random_gaussian_state

__all__ = [
    "ChainParams",
    "larmor_frequency",
    "static_hamiltonian_diagonal",
    "random_gaussian_state",
    "__version__",
]
