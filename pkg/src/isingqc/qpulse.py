"""Q-pulses: conditional rho*pi rotations with near-resonant transitions cancelled.

A Q-pulse rotates qubit i only when its neighbors match a given configuration.
Configurations with one excited neighbor (and edge qubits) need a single pulse
whose Rabi frequency makes every near-resonant level complete whole 2 pi
rotations.  Configurations 00 and 11 have two different near-resonant
detunings (2J and 4J); a main pulse handles 4J and a correcting pulse,
resonant with the one-excited-neighbor class, undoes the 2J residue.

Neighbor configurations are grouped by the number of excited neighbors,
called the class: '00' -> 0, '10'/'01' -> 1, '11' -> 2, and for edge qubits
'0' -> 0, '1' -> 1.  In the limit a -> infinity the interaction-frame action
of a Q-pulse is block diagonal over classes; the 2x2 blocks are computed by
the class model below and serve as the ideal reference for each Q-pulse.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .chain import ChainParams
from .dynamics import Pulse, mod_2pi_product, propagator_for

_CLASS = {"00": 0, "10": 1, "01": 1, "11": 2, "0": 0, "1": 1}


@dataclass(frozen=True)
class AngleSet:
    theta: float
    alpha: float
    Theta: float
    beta: float
    gamma: float


def k_for_rho(k: int, rho: float) -> int:
    """k_rho: k for full pi rotations, 2k for half rotations."""
    if rho == 1:
        return k
    if rho == 0.5:
        return 2 * k
    raise ValueError(f"rho must be 1 or 1/2, got {rho}")


def angle_set(k_rho, rho) -> AngleSet:
    """Angles that fix the correcting pulse and the gate phases.

    Theta and beta use principal arctangents.
    """
    if k_rho < 1 or rho <= 0:
        raise ValueError("need k_rho >= 1 and rho > 0")
    theta = np.pi * np.sqrt(k_rho**2 - rho**2 / 4)
    alpha = np.pi / 2 * np.sqrt(k_rho**2 + 3 * rho**2 / 4)
    Theta = np.arctan(-(theta / (2 * alpha)) * np.tan(alpha))
    beta = np.arctan(-(rho * np.pi / (2 * alpha)) * np.tan(alpha) * np.cos(Theta))
    rad = (np.pi * k_rho) ** 2 - (np.pi + beta) ** 2
    if rad < 0:
        raise ValueError(f"gamma undefined for k_rho={k_rho}, rho={rho} (negative radicand {rad:g})")
    return AngleSet(theta, alpha, Theta, beta, float(np.sqrt(rad)))


def config_class(config: str) -> int:
    try:
        return _CLASS[config]
    except KeyError:
        raise ValueError(f"unknown neighbor config {config!r}") from None


def is_edge(i: int, n: int) -> bool:
    return i == 0 or i == n - 1


def check_config(i: int, config: str, n: int):
    if not 0 <= i < n:
        raise IndexError(f"qubit {i} out of range for n={n}")
    want = 1 if is_edge(i, n) else 2
    if len(config) != want or config not in _CLASS:
        kind = "edge" if want == 1 else "interior"
        raise ValueError(f"config {config!r} invalid for {kind} qubit {i} (n={n})")


def flip_offset(cls: int, edge: bool, J: float = 1.0) -> float:
    """Flip energy of a neighbor class relative to the Larmor frequency."""
    return J * (1 - 2 * cls) if edge else 2 * J * (1 - cls)


@dataclass(frozen=True)
class QPulseSpec:
    """Abstract Q-pulse: rotate `qubit` by rho*pi about an axis at `phase`."""

    qubit: int
    config: str
    rho: float
    phase: float


@dataclass(frozen=True)
class PulseDesign:
    """Frequency offset (from omega_i), Rabi frequency and duration of one pulse."""

    offset: float
    omega: float
    tau: float


@dataclass(frozen=True)
class QPulseDesign:
    main: PulseDesign
    correcting: PulseDesign | None
    rotation: float = 0.0  # correcting-pulse rotation angle psi


def design(cls: int, rho: float, k: int, edge: bool, J: float = 1.0) -> QPulseDesign:
    """Pulse amplitudes and durations of a Q-pulse, independent of timing."""
    kr = k_for_rho(k, rho)
    nrot = 2 * kr / rho  # full turns times two on the near-resonant level
    if edge or cls == 1:
        om = 2 * J / np.sqrt(nrot**2 - 1)
        return QPulseDesign(PulseDesign(flip_offset(cls, edge, J), om, rho * np.pi / om), None)
    om = 4 * J / np.sqrt(nrot**2 - 1)
    ang = angle_set(kr, rho)
    psi = 2 * (np.pi + ang.beta)
    tauc = ang.gamma / J
    return QPulseDesign(
        PulseDesign(flip_offset(cls, False, J), om, rho * np.pi / om),
        PulseDesign(0.0, psi / tauc, tauc),
        psi,
    )


# -- class model -----------------------------------------------------------

def _two_level(delta, omega, tau, phi, t0):
    """Interaction-frame propagator of a detuned two-level transition.

    t0 only matters through delta * t0, and delta is always a multiple of 2J,
    so t0 can be any representative of the start time modulo pi/J.
    """
    hz = delta / 2
    hx = -(omega / 2) * np.cos(phi)
    hy = (omega / 2) * np.sin(phi)
    r = np.sqrt(hx * hx + hy * hy + hz * hz)
    c, s = np.cos(r * tau), np.sin(r * tau) / r
    U = np.array([[c - 1j * s * hz, -1j * s * (hx - 1j * hy)],
                  [-1j * s * (hx + 1j * hy), c + 1j * s * hz]])
    e0 = np.exp(0.5j * delta * t0)
    e1 = np.exp(0.5j * delta * (t0 + tau))
    D1 = np.array([e1, 1 / e1])
    D0 = np.array([e0, 1 / e0])
    return D1[:, None] * U * D0.conj()[None, :]


def reduced_clock(t: float, J: float = 1.0) -> float:
    """A time equivalent to t for every class-model phase (J t mod 2 pi)."""
    return mod_2pi_product(J, t) / J


def correcting_phase(des: QPulseDesign, phase: float, cls: int, t_main: float, J: float = 1.0) -> float:
    """Phase of the correcting pulse that makes the class-1 block diagonal.

    t_main is the main pulse start time (any value congruent mod 2 pi / J).
    """
    m = des.main
    U = _two_level(m.offset - flip_offset(1, False, J), m.omega, m.tau, phase, t_main)
    x, y = U[0, 0], U[1, 0]
    c, s = np.cos(des.rotation / 2), np.sin(des.rotation / 2)
    return float(-np.angle(1j * c * y / (s * x)))


def class_unitaries(cls: int, rho: float, phase: float, k: int, edge: bool, J: float = 1.0):
    """Ideal 2x2 interaction-frame action of a Q-pulse on each neighbor class.

    The result does not depend on the start time; t = 0 is used.
    """
    des = design(cls, rho, k, edge, J)
    classes = (0, 1) if edge else (0, 1, 2)
    m = des.main
    out = {s: _two_level(m.offset - flip_offset(s, edge, J), m.omega, m.tau, phase, 0.0) for s in classes}
    if des.correcting is not None:
        pc = correcting_phase(des, phase, cls, 0.0, J)
        cp = des.correcting
        for s in classes:
            out[s] = _two_level(cp.offset - flip_offset(s, edge, J), cp.omega, cp.tau, pc, m.tau) @ out[s]
    return out


def neighbor_class_array(i: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    cls = np.zeros(2**n, int)
    for l in (i - 1, i + 1):
        if 0 <= l < n:
            cls += (idx >> l) & 1
    return cls


def embed_class_blocks(i: int, n: int, blocks) -> np.ndarray:
    """Full-register matrix acting on qubit i with a 2x2 block per neighbor class."""
    dim = 2**n
    idx = np.arange(dim)
    lo = idx[((idx >> i) & 1) == 0]
    hi = lo | (1 << i)
    cls = neighbor_class_array(i, n)[lo]
    B = np.array([blocks[c] for c in range(max(blocks) + 1)])[cls]
    U = np.zeros((dim, dim), complex)
    U[lo, lo] = B[:, 0, 0]
    U[hi, lo] = B[:, 1, 0]
    U[lo, hi] = B[:, 0, 1]
    U[hi, hi] = B[:, 1, 1]
    return U


def ideal_qpulse_matrix(spec: QPulseSpec, n: int, k: int, J: float = 1.0) -> np.ndarray:
    """Infinite-gradient reference for one Q-pulse on the full register."""
    check_config(spec.qubit, spec.config, n)
    edge = is_edge(spec.qubit, n)
    blocks = class_unitaries(config_class(spec.config), spec.rho, spec.phase, k, edge, J)
    return embed_class_blocks(spec.qubit, n, blocks)


# -- concrete pulses -------------------------------------------------------

@dataclass(frozen=True)
class QPulse:
    spec: QPulseSpec
    pulses: tuple = field(default=())

    @property
    def t_end(self) -> float:
        return self.pulses[-1].t_end


def q_pulse(i: int, config: str, rho: float, phase: float, p: ChainParams, t_start: float = 0.0) -> QPulse:
    """Concrete 1-2 pulse realization starting at absolute time t_start."""
    check_config(i, config, p.n)
    spec = QPulseSpec(i, config, float(rho), float(phase))
    return realize(spec, p, t_start)


def realize(spec: QPulseSpec, p: ChainParams, t_start: float) -> QPulse:
    edge = is_edge(spec.qubit, p.n)
    cls = config_class(spec.config)
    des = design(cls, spec.rho, p.k, edge, p.J)
    w = (spec.qubit + 1) * p.a
    m = des.main
    first = Pulse(w + m.offset, m.omega, spec.phase, m.tau, t_start)
    if des.correcting is None:
        return QPulse(spec, (first,))
    pc = correcting_phase(des, spec.phase, cls, reduced_clock(t_start, p.J), p.J)
    cp = des.correcting
    second = Pulse(w + cp.offset, cp.omega, pc, cp.tau, first.t_end)
    return QPulse(spec, (first, second))


# -- calibration -----------------------------------------------------------

@dataclass
class Calibration:
    """Calibration outcome.

    residual is the worst near-resonant population leakage of the full Q-pulse.
    uncorrected_residual is the leakage envelope Omega^2/(Omega^2 + Delta^2) that a
    pi pulse of the same strength leaves on the nearest near-resonant level when
    it is not tuned to the 2 pi k condition; main_only_residual is the measured
    leakage of the main pulse without its correcting pulse.
    """

    config: str
    rho: float
    omega_c: float | None
    tau_c: float | None
    phase_offset: float
    residual: float
    uncorrected_residual: float
    floor: float
    ok: bool
    refined: bool = False
    main_only_residual: float = 0.0


class CalibrationError(RuntimeError):
    pass


def non_resonant_floor(p: ChainParams) -> float:
    """Largest single-pulse non-resonant flip probability, (Omega/a)^2 scale."""
    om = 4 * p.J / np.sqrt(4 * p.k**2 - 1)
    return float((om / p.a) ** 2)


def _near_leakage(U, i, n, cls_target):
    """Max population leaving a basis state whose neighbor class differs."""
    cls = neighbor_class_array(i, n)
    pops = np.abs(np.diag(U)) ** 2
    off = cls != cls_target
    return float(np.max(1 - pops[off]))


def _exact_qpulse(p, pulses):
    eng = propagator_for(p)
    U = np.eye(p.dim, dtype=complex)
    for pl in pulses:
        U = eng.interaction_unitary(pl) @ U
    return U


def calibrate_q_pulse(i: int, config: str, rho: float, p: ChainParams, refine: bool = True,
                      tol_factor: float = 10.0) -> Calibration:
    """Check (and if needed refine) the correcting pulse against the exact propagator.

    The residual is the worst near-resonant population leakage of the full
    Q-pulse; it must reach tol_factor times the non-resonant floor.  A
    one-excited-neighbor (or edge) Q-pulse has no free internals.
    """
    check_config(i, config, p.n)
    edge = is_edge(i, p.n)
    cls = config_class(config)
    floor = non_resonant_floor(p)
    qp = q_pulse(i, config, rho, 0.0, p)
    res = _near_leakage(_exact_qpulse(p, qp.pulses), i, p.n, cls)
    main_only = _near_leakage(_exact_qpulse(p, qp.pulses[:1]), i, p.n, cls)
    des = design(cls, rho, p.k, edge, p.J)
    om = des.main.omega
    near = min(abs(flip_offset(c, edge, p.J) - des.main.offset) for c in ((0, 1) if edge else (0, 1, 2)) if c != cls)
    base = float(om**2 / (om**2 + near**2))
    if des.correcting is None:
        return Calibration(config, rho, None, None, 0.0, res, base, floor, res <= tol_factor * floor,
                           main_only_residual=main_only)
    cp = des.correcting
    out = Calibration(config, rho, cp.omega, cp.tau, 0.0, res, base, floor, res <= tol_factor * floor,
                      main_only_residual=main_only)
    if out.ok or not refine:
        if not out.ok:
            raise CalibrationError(f"Q-pulse {config} residual {res:.3g} above {tol_factor}x floor {floor:.3g}")
        return out
    main = qp.pulses[0]
    pc0 = qp.pulses[1].phi

    def leak(x):
        om, tau, dphi = cp.omega * (1 + x[0]), cp.tau * (1 + x[1]), x[2]
        corr = Pulse(main.nu - des.main.offset, om, pc0 + dphi, tau, main.t_end)
        U = _exact_qpulse(p, (main, corr))
        cls_arr = neighbor_class_array(i, p.n)
        return 1 - np.abs(np.diag(U))[cls_arr != cls] ** 2

    fit = least_squares(leak, np.zeros(3), xtol=1e-14, ftol=1e-14)
    best = float(np.max(leak(fit.x)))
    if best < res:
        out = Calibration(config, rho, cp.omega * (1 + fit.x[0]), cp.tau * (1 + fit.x[1]), float(fit.x[2]),
                          best, base, floor, best <= tol_factor * floor, refined=True,
                          main_only_residual=main_only)
    if not out.ok:
        raise CalibrationError(
            f"Q-pulse {config} best residual {out.residual:.3g} above {tol_factor}x floor {floor:.3g}")
    return out
