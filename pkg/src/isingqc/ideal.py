"""Exact ideal gate matrices and algorithm unitaries (qubit l = bit 2**l)."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .gates import GateSpec, algorithm_gates

HADAMARD = np.array([[1, 1], [1, -1]], complex) / np.sqrt(2)


def single_qubit(n: int, q: int, M: np.ndarray) -> np.ndarray:
    """Embed a 2x2 operator acting on qubit q."""
    return np.kron(np.kron(np.eye(2 ** (n - 1 - q)), M), np.eye(2**q))


def _permutation(n: int, f, sign=None) -> np.ndarray:
    dim = 2**n
    src = np.arange(dim)
    dst = np.array([f(b) for b in src])
    U = np.zeros((dim, dim), complex)
    U[dst, src] = 1.0 if sign is None else np.array([sign(b) for b in src])
    return U


def _bit(b, l):
    return (b >> l) & 1


def bit_reverse(b: int, n: int) -> int:
    return int(sum(_bit(b, l) << (n - 1 - l) for l in range(n)))


def ideal_gate_matrix(g: GateSpec, n: int) -> np.ndarray:
    g.validate(n)
    kind, q = g.kind, g.qubits
    idx = np.arange(2**n)
    if kind == "A":
        return single_qubit(n, q[0], HADAMARD)
    if kind == "Z":
        return np.diag(1.0 - 2 * _bit(idx, q[0])).astype(complex)
    if kind == "N":
        return _permutation(n, lambda b: b ^ (1 << q[0]))
    if kind == "B":
        both = _bit(idx, q[0]) & _bit(idx, q[1])
        return np.diag(np.exp(1j * g.phi * both))
    if kind == "CN":
        i, j = q
        return _permutation(n, lambda b: b ^ (_bit(b, i) << j))
    if kind in ("R", "Rdag", "G"):
        i, j = q
        # R |a_i b_j> = (-1)^b |a_i, (not a_i) xor b_j>
        R = _permutation(n, lambda b: b ^ ((1 - _bit(b, i)) << j), sign=lambda b: (-1.0) ** _bit(b, j))
        if kind == "R":
            return R
        if kind == "Rdag":
            return R.conj().T
        return R.conj().T @ ideal_gate_matrix(GateSpec("B", q, g.phi), n)
    if kind == "S":
        i, j = q
        return _permutation(n, lambda b: b ^ ((_bit(b, i) ^ _bit(b, j)) * ((1 << i) | (1 << j))))
    if kind == "T":
        return _permutation(n, lambda b: bit_reverse(b, n))
    raise ValueError(f"unknown gate kind {kind!r}")


@lru_cache(maxsize=32)
def _algorithm(algo: str, n: int):
    gates = algorithm_gates(algo, n)
    U = np.eye(2**n, dtype=complex)
    prefixes = []
    for g in gates:
        U = ideal_gate_matrix(g, n) @ U
        prefixes.append(U)
    for M in prefixes:
        M.setflags(write=False)
    return tuple(gates), tuple(prefixes)


def ideal_algorithm_unitary(algo: str, n: int, prefixes: bool = False):
    """Full ideal unitary; with prefixes=True also U(t) = U_t ... U_1 for every t."""
    gates, pre = _algorithm(algo.lower(), n)
    if prefixes:
        return pre[-1], list(pre)
    return pre[-1]


def dft_matrix(n: int) -> np.ndarray:
    """Textbook DFT, F[x, y] = exp(2 pi i x y / N) / sqrt(N)."""
    N = 2**n
    x = np.arange(N)
    return np.exp(2j * np.pi * np.outer(x, x) / N) / np.sqrt(N)
