import itertools

import numpy as np
import pytest

from isingqc.gates import GateSpec
from isingqc.ideal import HADAMARD, bit_reverse, dft_matrix, ideal_algorithm_unitary, ideal_gate_matrix


def all_gates(n):
    gs = [GateSpec(x, (j,)) for x in "AZN" for j in range(n)]
    gs += [GateSpec(kd, (i, j)) for i, j in itertools.permutations(range(n), 2)
           for kd in ("B", "CN", "R", "Rdag", "S", "G")]
    return gs + [GateSpec("T")]


def test_hadamard_on_zero():
    U = ideal_gate_matrix(GateSpec("A", (0,)), 1)
    assert np.allclose(U @ [1, 0], np.array([1, 1]) / np.sqrt(2))
    assert np.allclose(U, HADAMARD)


def test_b_phase():
    U = ideal_gate_matrix(GateSpec("B", (0, 2)), 3)
    expect = np.ones(8, complex)
    expect[0b101] = np.exp(1j * np.pi / 4)
    expect[0b111] = np.exp(1j * np.pi / 4)
    assert np.allclose(U, np.diag(expect))


def test_r_gate_signs():
    R = ideal_gate_matrix(GateSpec("R", (0, 1)), 2)
    assert R[0b10, 0b00] == 1  # a=0, b=0: target set, sign +
    assert R[0b11, 0b11] == -1  # a=1, b=1: target 0 xor 1 = 1, sign -
    assert np.allclose(ideal_gate_matrix(GateSpec("Rdag", (0, 1)), 2), R.conj().T)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gate_matrices_unitary(n):
    for g in all_gates(n):
        U = ideal_gate_matrix(g, n)
        assert np.abs(U.conj().T @ U - np.eye(2**n)).max() < 1e-14, g
        if g.kind in ("B", "Z"):
            assert np.count_nonzero(U - np.diag(np.diag(U))) == 0


def test_transposition_permutation():
    for n in (2, 3, 5):
        T = ideal_gate_matrix(GateSpec("T"), n)
        assert set(np.unique(T.real)) <= {0.0, 1.0} and np.allclose(T @ T, np.eye(2**n))
    assert bit_reverse(0b001, 3) == 0b100


@pytest.mark.parametrize("n", range(2, 9))
def test_qft_equals_iqft(n):
    assert np.abs(ideal_algorithm_unitary("qft", n) - ideal_algorithm_unitary("iqft", n)).max() < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_qft_is_dft(n):
    assert np.abs(ideal_algorithm_unitary("qft", n) - dft_matrix(n)).max() < 1e-12


def test_qft_of_zero_is_uniform():
    out = ideal_algorithm_unitary("qft", 3)[:, 0]
    assert np.allclose(out, np.full(8, 1 / np.sqrt(8)))


def test_prefixes():
    U, pre = ideal_algorithm_unitary("qft", 4, prefixes=True)
    assert len(pre) == 11 and np.array_equal(pre[-1], U)
    assert not pre[0].flags.writeable


def test_invalid_spec():
    with pytest.raises(ValueError):
        ideal_gate_matrix(GateSpec("A", (3,)), 3)
