import itertools

import numpy as np
import pytest

from isingqc.chain import ChainParams, random_gaussian_state
from isingqc.compiler import (PulseSchedule, compile_algorithm, compile_gate, count_report, gate_qpulses,
                              pulse_count)
from isingqc.dynamics import evolve, propagator_for, schedule_unitary
from isingqc.gatephases import phase_error
from isingqc.gates import GateSpec, algorithm_gates, gate_count
from isingqc.ideal import ideal_algorithm_unitary, ideal_gate_matrix
from isingqc.qpulse import (CalibrationError, angle_set, calibrate_q_pulse, ideal_qpulse_matrix,
                            neighbor_class_array, non_resonant_floor, q_pulse)


def exact(p, pulses):
    eng = propagator_for(p)
    U = np.eye(p.dim, dtype=complex)
    for pl in pulses:
        U = eng.interaction_unitary(pl) @ U
    return U


def test_angle_set_examples():
    s = angle_set(2, 1.0)
    assert s.theta == pytest.approx(np.pi * np.sqrt(3.75))
    s = angle_set(7, 0.5)
    assert s.gamma**2 + (np.pi + s.beta) ** 2 == pytest.approx((np.pi * 7) ** 2, rel=1e-12)
    small = angle_set(5, 1e-6)
    assert small.theta == pytest.approx(5 * np.pi) and small.alpha == pytest.approx(5 * np.pi / 2)


def test_angle_set_negative_radicand():
    # the smallest k leaves no real duration for the correcting pulse
    with pytest.raises(ValueError, match="negative radicand"):
        angle_set(1, 1.0)
    with pytest.raises(ValueError):
        angle_set(0, 1.0)


@pytest.mark.parametrize("i,config,rho", [(1, "00", 1.0), (1, "11", 0.5), (1, "10", 1.0), (0, "1", 0.5),
                                          (2, "0", 1.0)])
def test_qpulse_near_resonant_cancellation(i, config, rho):
    p = ChainParams(n=3, a=1000, k=32)
    qp = q_pulse(i, config, rho, 0.4, p, t_start=777.0)
    assert len(qp.pulses) == (2 if config in ("00", "11") else 1)
    U = exact(p, qp.pulses)
    cls = neighbor_class_array(i, p.n)
    target = {"00": 0, "10": 1, "01": 1, "11": 2, "0": 0, "1": 1}[config]
    pops = np.abs(np.diag(U)) ** 2
    assert np.max(1 - pops[cls != target]) <= 10 * non_resonant_floor(p)
    assert np.abs(U - ideal_qpulse_matrix(qp.spec, p.n, p.k)).max() < 1e-2


def test_qpulse_resonant_flip():
    p = ChainParams(n=3, a=1000, k=32)
    U = exact(p, q_pulse(1, "10", 1.0, 0.0, p).pulses)
    # |0 0 1> (qubit 0 set) -> qubit 1 flipped: |0 1 1>
    assert abs(U[0b011, 0b001]) ** 2 > 1 - 10 * non_resonant_floor(p)


def test_calibration_example():
    p = ChainParams(n=3, a=100, k=128)
    cal = calibrate_q_pulse(1, "00", 1.0, p)
    assert cal.ok and cal.residual <= 1e-6
    assert 1e-5 < cal.uncorrected_residual < 1e-4
    assert cal.uncorrected_residual > 100 * cal.residual
    noop = calibrate_q_pulse(1, "10", 1.0, p)
    assert noop.omega_c is None and not noop.refined
    assert noop.uncorrected_residual == pytest.approx(1 / (4 * 128**2), rel=1e-3)
    assert calibrate_q_pulse(1, "00", 1.0, p) == cal


def test_calibration_failure_reported():
    p = ChainParams(n=3, a=100, k=4)
    with pytest.raises(CalibrationError):
        calibrate_q_pulse(1, "00", 1.0, p, refine=False, tol_factor=1e-6)


def test_gate_counts():
    assert gate_count("qft", 4) == 11 and len(algorithm_gates("qft", 4)) == 11
    assert gate_count("iqft", 4) == 17
    assert pulse_count("qft", 2) == 39 and pulse_count("qft", 4) == 757
    assert pulse_count("iqft", 10) == 44541
    for n in range(2, 8):
        assert count_report("qft", n)["match"] and count_report("iqft", n)["match"]


def test_edge_hadamard_has_four_qpulses():
    assert len(gate_qpulses(GateSpec("A", (0,)), 2, 8)) == 4
    assert len(gate_qpulses(GateSpec("A", (1,)), 3, 8)) == 6


def test_invalid_gates():
    with pytest.raises(ValueError):
        GateSpec("B", (1, 1))
    with pytest.raises(ValueError):
        GateSpec("X", (0,))
    with pytest.raises(ValueError):
        gate_qpulses(GateSpec("A", (5,)), 3, 8)


def test_b_gate_two_qubits():
    p = ChainParams(n=2, a=1000, k=1024)
    U = schedule_unitary(compile_gate(GateSpec("B", (0, 1)), p))
    assert phase_error(U, np.diag([1, 1, 1, 1j])) <= 1e-4


def test_transposition_maps_basis_states():
    p = ChainParams(n=3, a=1000, k=1024)
    U = schedule_unitary(compile_gate(GateSpec("T"), p))
    assert abs(U[0b100, 0b001]) ** 2 >= 1 - 1e-3


def test_gates_compose_at_any_time():
    """Two gates compiled back to back equal the ideal product (phase bookkeeping)."""
    p = ChainParams(n=3, a=1000, k=256)
    gs = [GateSpec("A", (1,)), GateSpec("B", (0, 2)), GateSpec("CN", (2, 1))]
    s = PulseSchedule(p)
    for g in gs:
        s.add_gate(g)
    s.check_markers()
    V = np.eye(8, dtype=complex)
    for g in gs:
        V = ideal_gate_matrix(g, 3) @ V
    assert phase_error(schedule_unitary(s), V) < 5e-3


def test_ideal_qpulse_products_equal_gates():
    k = 5
    for n in (2, 3, 4):
        gs = [GateSpec(x, (j,)) for x in "AZN" for j in range(n)]
        gs += [GateSpec(kd, (i, j)) for i, j in itertools.permutations(range(n), 2)
               for kd in ("B", "CN", "R", "Rdag", "S", "G")]
        gs.append(GateSpec("T"))
        for g in gs:
            U = np.eye(2**n, dtype=complex)
            for s in gate_qpulses(g, n, k):
                U = ideal_qpulse_matrix(s, n, k) @ U
            assert phase_error(U, ideal_gate_matrix(g, n)) < 1e-9, g


def test_schedule_json_round_trip_bit_exact():
    p = ChainParams(n=3, a=1000, k=64)
    s = compile_algorithm("qft", p)
    text = s.to_json()
    back = PulseSchedule.from_json(text)
    assert back.params == s.params
    assert back.pulses == s.pulses and back.qpulses == s.qpulses and back.gates == s.gates
    assert back.to_json() == text
    with pytest.raises(ValueError):
        PulseSchedule.from_dict({"format": "other"})


def test_markers_partition_pulses():
    s = compile_algorithm("iqft", ChainParams(n=4, a=1000, k=64))
    s.check_markers()
    assert len(s.gates) == 17
    assert s.gates[-1].gate.kind == "T"
    assert len(s.pulses) == pulse_count("iqft", 4)


def test_full_qft_fidelity_high_ka():
    p = ChainParams(n=5, a=1000, k=1024)
    s = compile_algorithm("qft", p)
    psi = random_gaussian_state(5, seed=11)
    out = evolve(psi, s)
    assert abs(np.vdot(ideal_algorithm_unitary("qft", 5) @ psi, out)) ** 2 >= 0.999
