"""Machine parameters, basis conventions and the drive-free Hamiltonian.

Units: hbar = 1 and the Ising coupling J = 1 sets the energy scale.
Qubit l is bit 2**l of a basis index, and sigma_z|0> = +|0>, so bit value 0
carries spin sign s = +1 and bit value 1 carries s = -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SELECTIVE_RATIO = 10.0


@dataclass(frozen=True)
class ChainParams:
    """Open Ising chain: n qubits, Larmor gradient a, 2pi-k integer k."""

    n: int
    a: float
    k: int
    J: float = 1.0
    warnings: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.J != 1.0:
            raise ValueError("J is the energy unit and is fixed to 1")
        notes = []
        if self.a / self.J < SELECTIVE_RATIO:
            notes.append(f"a/J = {self.a / self.J:g} < {SELECTIVE_RATIO:g}: outside selective excitation")
        # largest Rabi frequency used is the 00/11 main pulse, ~ 2J/k
        omega_max = 4 * self.J / np.sqrt(4 * self.k**2 - 1)
        if self.J / omega_max < SELECTIVE_RATIO:
            notes.append(f"J/Omega = {self.J / omega_max:.3g} < {SELECTIVE_RATIO:g}: Rabi frequency not small")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "warnings", tuple(notes))

    @property
    def dim(self) -> int:
        return 2**self.n

    @property
    def selective(self) -> bool:
        return not self.warnings

    def with_n(self, n: int) -> "ChainParams":
        return ChainParams(n=n, a=self.a, k=self.k, J=self.J)


def larmor_frequency(l: int, p: ChainParams) -> float:
    """omega_l = (l + 1) a."""
    if not 0 <= l < p.n:
        raise IndexError(f"qubit {l} out of range for n={p.n}")
    return (l + 1) * p.a


@lru_cache(maxsize=None)
def spin_signs(n: int) -> np.ndarray:
    """(2**n, n) array of s_l = +1 (bit 0) or -1 (bit 1)."""
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    out = 1 - 2 * bits
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def energy_coefficients(n: int):
    """Integer coefficients (ca, cj, cz) of the diagonal energies.

    E_b = ca[b] * (a/2) + cj[b] * (J/2) and 2 * S_z[b] = cz[b], with
    S_z = sum_l sigma_z^l / 2.  Keeping integers lets phases like E_b t be
    reduced modulo 2 pi without losing precision at large t.
    """
    s = spin_signs(n)
    ca = -(s * np.arange(1, n + 1)).sum(axis=1)
    cj = -(s[:, :-1] * s[:, 1:]).sum(axis=1) if n > 1 else np.zeros(2**n, int)
    cz = s.sum(axis=1)
    for arr in (ca, cj, cz):
        arr.setflags(write=False)
    return ca, cj, cz


def static_hamiltonian_diagonal(p: ChainParams) -> np.ndarray:
    """Diagonal of H0 = -1/2 sum_l omega_l sigma_z^l - J/2 sum_l sigma_z^l sigma_z^{l+1}."""
    ca, cj, _ = energy_coefficients(p.n)
    return ca * (p.a / 2) + cj * (p.J / 2)


def bit(b: int, l: int) -> int:
    return (b >> l) & 1


def random_gaussian_state(n: int, seed=None, size=None) -> np.ndarray:
    """Normalized state(s) with i.i.d. complex Gaussian amplitudes.

    With size=None a single vector of length 2**n is returned, otherwise an
    array of shape (2**n, size) whose columns are independent states.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (2**n,) if size is None else (2**n, size)
    psi = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return psi / np.linalg.norm(psi, axis=0)
