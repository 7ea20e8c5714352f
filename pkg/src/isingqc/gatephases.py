"""Numerically solved Q-pulse phases for the N, CN and two-qubit-chain B gates.

These gates have fixed Q-pulse skeletons (which qubit, neighbor config and
rho for every Q-pulse) but no closed-form phases.  The phases are found by
least squares against the ideal gate using the infinite-gradient class model,
which is exact up to the non-resonant corrections of order J/(ka).  A phase
set solved on the smallest chain that contains every neighbor configuration
is valid on any chain, because a Q-pulse only sees its two neighbors.

Skeleton entries are (qubit, config, rho, slot, offset_slot) where slot is
either an index into the free-phase vector or ('fixed', value), and the
optional offset_slot adds another free phase (used for phase-shifted N).
Entries are written in operator-product order, rightmost acting first.
"""
from __future__ import annotations

import threading
from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares

from .ideal import ideal_gate_matrix
from .gates import GateSpec
from .qpulse import QPulseSpec, ideal_qpulse_matrix

SOLVE_TOL = 1e-12  # max-abs operator error accepted from the phase solver
_SEED = 20240607
_lock = threading.RLock()


def phase_error(U: np.ndarray, target: np.ndarray) -> float:
    """Max-abs distance after removing the best global phase."""
    ov = np.trace(target.conj().T @ U)
    if abs(ov) < 1e-300:
        return float(np.abs(U - target).max())
    return float(np.abs(U - target * ov / abs(ov)).max())


def skeleton_specs(skel, x):
    specs = []
    for q, cfg, rho, slot, off in skel:
        ph = slot[1] if isinstance(slot, tuple) else x[slot]
        if off is not None:
            ph = ph + x[off]
        specs.append(QPulseSpec(q, cfg, rho, float(ph)))
    return specs


def written_product(n: int, specs, k: int) -> np.ndarray:
    U = np.eye(2**n, dtype=complex)
    for s in specs:
        U = U @ ideal_qpulse_matrix(s, n, k)
    return U


def _solve(n, skel, target, k, nfree, tries=400):
    def resid(x):
        U = written_product(n, skeleton_specs(skel, x), k)
        ov = np.trace(target.conj().T @ U)
        D = U - target * ov / max(abs(ov), 1e-12)
        return np.concatenate([D.real.ravel(), D.imag.ravel()])

    rng = np.random.default_rng(_SEED)
    best = None
    for _ in range(tries):
        x0 = rng.uniform(-np.pi, np.pi, nfree)
        fit = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or fit.cost < best.cost:
            best = fit
        err = phase_error(written_product(n, skeleton_specs(skel, fit.x), k), target)
        if err < SOLVE_TOL:
            return np.mod(fit.x, 2 * np.pi), err
    err = phase_error(written_product(n, skeleton_specs(skel, best.x), k), target)
    raise RuntimeError(f"phase solve failed: best operator error {err:.3g}")


def _n_configs(edge: bool):
    return ("1", "0") if edge else ("11", "10", "00")


def n_skeleton(q: int, edge: bool, first_slot: int = 0, offset=None, phases=None):
    """Flip of qubit q: one rho=1 Q-pulse per neighbor class."""
    out = []
    for m, c in enumerate(_n_configs(edge)):
        slot = ("fixed", phases[m]) if phases is not None else first_slot + m
        out.append((q, c, 1.0, slot, offset))
    return out


@lru_cache(maxsize=None)
def not_phases(k: int, edge: bool) -> tuple:
    """Phases of the N gate Q-pulses (written order 11, 10, 00 or 1, 0)."""
    with _lock:
        if edge:
            n, q = 2, 0
        else:
            n, q = 3, 1
        skel = n_skeleton(q, edge)
        target = ideal_gate_matrix(GateSpec("N", (q,)), n)
        x, _ = _solve(n, skel, target, k, len(skel))
        return tuple(float(v) for v in x)


def _target_blocks(t: int, target_edge: bool):
    """Target-qubit Q-pulse lists (written order), slots starting at 2."""
    if target_edge:
        first = [(t, "0", 1.0, 2, None)]
        second = [(t, "0", 1.0, 3, None), (t, "1", 1.0, 4, None)]
        return first, second, 5
    first = [(t, "10", 1.0, 2, None), (t, "00", 1.0, 3, None)]
    second = [(t, "10", 1.0, 6, None), (t, "10", 1.0, 7, None),
              (t, "11", 1.0, 4, None), (t, "10", 1.0, 5, None)]
    return first, second, 8


def cn_skeleton(c: int, t: int, control_edge: bool, target_edge: bool, k: int):
    """CN = N_c(psi2) T2 N_c(psi1) T1 in written order.

    T1 and T2 are the target-qubit blocks; psi1, psi2 are free offsets added
    to every phase of the respective control flip.
    """
    nph = not_phases(k, control_edge)
    first, second, nfree = _target_blocks(t, target_edge)
    skel = (n_skeleton(c, control_edge, offset=1, phases=nph) + second
            + n_skeleton(c, control_edge, offset=0, phases=nph) + first)
    return skel, nfree


_CN_GEOMETRY = {
    (False, False): (4, 1, 2),
    (True, False): (3, 0, 1),
    (False, True): (3, 1, 2),
    (True, True): (2, 0, 1),
}


@lru_cache(maxsize=None)
def cnot_phases(k: int, control_edge: bool, target_edge: bool) -> tuple:
    with _lock:
        n, c, t = _CN_GEOMETRY[(control_edge, target_edge)]
        skel, nfree = cn_skeleton(c, t, control_edge, target_edge, k)
        target = ideal_gate_matrix(GateSpec("CN", (c, t)), n)
        x, _ = _solve(n, skel, target, k, nfree)
        return tuple(float(v) for v in x)


def b2_skeleton(i: int, j: int, k: int):
    """Controlled phase on a two-qubit chain: N_i(x1) blk2 N_i(x0) blk1."""
    nph = not_phases(k, True)
    blk1 = [(j, "1", 1.0, 2, None), (j, "1", 1.0, 3, None), (j, "0", 1.0, 4, None)]
    blk2 = [(j, "0", 1.0, 5, None), (j, "0", 1.0, 6, None), (j, "1", 1.0, 7, None)]
    skel = n_skeleton(i, True, offset=1, phases=nph) + blk2 + n_skeleton(i, True, offset=0, phases=nph) + blk1
    return skel, 8


@lru_cache(maxsize=None)
def b2_phases(k: int, phi: float) -> tuple:
    with _lock:
        skel, nfree = b2_skeleton(0, 1, k)
        target = ideal_gate_matrix(GateSpec("B", (0, 1), phi), 2)
        x, _ = _solve(2, skel, target, k, nfree)
        return tuple(float(v) for v in x)
