import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from isingqc.analysis import (BranchCutError, CorrelationMatrix, LinearResponseWarning, OutOfValidityWarning,
                              contour_asymptotes, contour_delta, contour_ka_delta, correlation_matrix,
                              crossover_scan, delta_crit, drift_tolerance, extract_generator, fidelity,
                              fit_error_polynomial, fit_strength_constant, haar_average_fidelity, linear_response_fidelity,
                              log_log_slope, max_qubits, nonresonant_strength,
                              predicted_fidelity)
from isingqc.chain import random_gaussian_state
from isingqc.errors import sample_gue
from isingqc.ideal import ideal_algorithm_unitary


def test_fidelity_basics():
    psi = random_gaussian_state(3, seed=0)
    e = np.eye(8)
    assert fidelity(psi, psi) == pytest.approx(1)
    assert fidelity(e[:, 0], e[:, 1]) == 0
    phi = e[:, 2] - np.vdot(psi, e[:, 2]) * psi
    phi /= np.linalg.norm(phi)
    assert fidelity(psi, (psi + phi) / np.sqrt(2)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fidelity(psi, psi[:4])


def test_haar_average_matches_sampling():
    U = ideal_algorithm_unitary("qft", 3)
    W = expm(-0.3j * sample_gue(8, seed=1).V) @ U
    psi = random_gaussian_state(3, seed=2, size=20000)
    assert haar_average_fidelity(W, U) == pytest.approx(np.mean(fidelity(U @ psi, W @ psi)), abs=3e-3)
    assert haar_average_fidelity(U, U) == pytest.approx(1)


def test_extract_generator():
    U = ideal_algorithm_unitary("qft", 3)
    assert np.abs(extract_generator(U, U)).max() < 1e-12
    V = sample_gue(8, seed=3).V
    G = extract_generator(U, expm(-0.01j * V) @ U)
    assert np.abs(G - 0.01 * V).max() < 1e-12
    with pytest.raises(BranchCutError):
        extract_generator(np.eye(2), np.diag([1.0, -1.0]))


def test_correlation_matrix_definitions():
    d = 8
    Z = [np.zeros((d, d))] * 3
    P = [np.eye(d)] * 3
    assert np.all(correlation_matrix(Z, P).C == 0)
    G = sample_gue(d, seed=4).V
    G = G - np.trace(G) / d * np.eye(d)
    C = correlation_matrix([G], [ideal_algorithm_unitary("qft", 3)]).C
    assert C[0, 0] == pytest.approx(np.real(np.trace(G @ G)) / d)
    assert correlation_matrix([], []).C.shape == (0, 0)
    with pytest.raises(ValueError):
        correlation_matrix([G], [np.eye(d)], averaging="states")


def test_correlation_symmetric_and_running_sum():
    rng = np.random.default_rng(0)
    gens = [sample_gue(8, seed=s).V * 0.01 for s in range(6)]
    pre = [expm(-1j * sample_gue(8, seed=10 + s).V) for s in range(6)]
    cm = correlation_matrix(gens, pre)
    assert np.allclose(cm.C, cm.C.T)
    run = cm.running_sum()
    assert run[-1] == pytest.approx(cm.total)
    assert run[2] == pytest.approx(cm.C[:3, :3].sum())
    states = random_gaussian_state(3, seed=rng.integers(1 << 30), size=4000)
    cs = correlation_matrix(gens, pre, averaging="states", states=states)
    assert np.abs(cs.C - cm.C).max() < 0.15 * np.abs(cm.C).max()


def test_linear_response():
    F, run = linear_response_fidelity(np.zeros((4, 4)), 0.1)
    assert F == 1 and np.all(run == 0)
    F, run = linear_response_fidelity(np.eye(5), 0.1)
    assert F == pytest.approx(1 - 0.01 * 5) and run[-1] == pytest.approx(0.05)
    with pytest.warns(LinearResponseWarning):
        linear_response_fidelity(np.eye(50), 0.1)
    assert CorrelationMatrix(np.ones((2, 2)), "trace").off_diagonal_mass() == 2


def test_predictions_examples():
    assert 1 - predicted_fidelity("intrinsic", 5, ka=1024000) == pytest.approx(2.2e-6, rel=0.02)
    F = predicted_fidelity("gue_int", 5, delta=0.04)
    assert F == pytest.approx(np.exp(-0.0016 * 48.65), rel=1e-4) and F == pytest.approx(0.925, abs=1e-3)
    assert predicted_fidelity("both", 6, ka=4e4, delta=0.0) == predicted_fidelity("intrinsic", 6, ka=4e4)
    both = predicted_fidelity("both", 6, ka=4e4, delta=0.02, algo="iqft")
    assert both == pytest.approx(predicted_fidelity("intrinsic", 6, ka=4e4, algo="iqft")
                                 * predicted_fidelity("gue_int", 6, delta=0.02, algo="iqft"))
    with pytest.warns(OutOfValidityWarning):
        predicted_fidelity("intrinsic", 3, ka=1e5)
    with pytest.raises(ValueError):
        predicted_fidelity("intrinsic", 5)
    with pytest.raises(ValueError):
        predicted_fidelity("nope", 5)
    assert drift_tolerance(1000, 4, 0.1, 3) == pytest.approx(1000 * 4**5 / 0.1)


def test_fit_recovers_noiseless():
    ns = np.arange(5, 11)
    f = fit_error_polynomial(list(zip(ns, 280 * ns**6 - 660 * ns**5)))
    assert f.powers == (6, 5)
    assert np.allclose(f.coefficients, (280, -660), rtol=1e-6)
    assert f.leading_power == 6 and f.leading_coefficient == pytest.approx(280)
    assert f(7) == pytest.approx(280 * 7**6 - 660 * 7**5)


def test_fit_with_noise():
    ns = np.arange(5, 11)
    y0 = 280 * ns**6 - 660 * ns**5
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(50):
        y = y0 * (1 + 0.05 * rng.standard_normal(len(ns)))
        f = fit_error_polynomial(list(zip(ns, y)), powers=(6, 5))
        bad += abs(f.coefficients[0] / 280 - 1) > 0.15
    assert bad <= 2


def test_fit_constant():
    f = fit_error_polynomial([(n, 3.0) for n in range(3, 8)])
    assert f.powers == (0,) and f.coefficients[0] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        fit_error_polynomial([(3, 1.0), (4, 2.0)])


def test_log_log_slope():
    x = np.array([32, 64, 128, 256])
    assert log_log_slope(x, 5 / x**2) == pytest.approx(-2)


def test_delta_crit():
    assert delta_crit(5, 40000) == pytest.approx(0.0216, abs=5e-4)
    for d in (0.01, 0.03, 0.05):
        rows = crossover_scan([5], [40000], [d])
        assert (rows[0]["best"] == "iqft") == (d > delta_crit(5, 40000))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ns = np.array([40.0, 80.0])
        r = delta_crit(ns, 1e6)
    assert r[1] / r[0] == pytest.approx(2**1.5, rel=0.05)
    no = {"intrinsic": {"qft": {6: 1.0}, "iqft": {6: 2.0}}, "gue_int": {"qft": {3: 1.0}, "iqft": {3: 2.0}}}
    assert np.isnan(delta_crit(5, 1e4, polynomials=no))


def test_contours():
    level = 0.9
    d = float(contour_delta("qft", level, 6, 1e5))
    assert predicted_fidelity("both", 6, 1e5, d) == pytest.approx(level)
    rows = contour_ka_delta(level, 6, np.geomspace(2e4, 1e6, 30))
    assert {r["best"] for r in rows} == {"qft", "iqft"}
    asy = contour_asymptotes(level, 6, "qft")
    assert np.isnan(contour_delta("qft", level, 6, 0.9 * asy["ka_min"]))
    assert float(contour_delta("qft", level, 6, 1e12)) == pytest.approx(asy["delta_max"], rel=1e-6)


def test_max_qubits():
    n, algo = max_qubits(0.9, 1e5)
    assert n == 12 and algo == "qft"


def test_nonresonant_strength():
    assert nonresonant_strength(2) == 1.0
    assert nonresonant_strength(3, ka=10) == pytest.approx((2 * (2 / 1 + 1 / 4) / 3) / 100)
    assert nonresonant_strength(10**5) == pytest.approx(np.pi**2 / 3, rel=1e-3)
    a_small, a_large = fit_strength_constant(range(3, 8)), fit_strength_constant(range(1000, 5000, 100))
    # the log n / n correction tends to 2 from above
    assert a_small > a_large > 2
