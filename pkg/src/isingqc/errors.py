"""Static GUE perturbations and where they are inserted into a protocol.

A perturbation acts as exp(-i delta V) with V drawn from the Gaussian unitary
ensemble and normalized so that Tr(V^2)/dim = 1; delta carries the strength.
It is inserted after every gate (except the final bit-reversal) or after every
raw pulse.  "interaction_static" applies the same matrix in the interaction
frame at every insertion; "lab_static" keeps V fixed in the lab frame, which in
the interaction frame reads W^dagger(t) exp(-i delta V) W(t), W(t) = exp(-i H0 t).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import propagator_for

PLACEMENTS = ("after_each_gate", "after_each_pulse")
FRAMES = ("interaction_static", "lab_static")


@dataclass(frozen=True)
class GuePerturbation:
    V: np.ndarray
    delta: float
    seed: int | None = None

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    def unitary(self, delta: float | None = None) -> np.ndarray:
        """exp(-i delta V) through the eigendecomposition of V."""
        d = self.delta if delta is None else delta
        w, Q = self._eig
        return (Q * np.exp(-1j * d * w)) @ Q.conj().T

    @property
    def _eig(self):
        cache = self.__dict__.get("_eig_cache")
        if cache is None:
            cache = np.linalg.eigh(self.V)
            object.__setattr__(self, "_eig_cache", cache)
        return cache


def sample_gue(dim: int, seed=None, delta: float = 1.0) -> GuePerturbation:
    """GUE matrix rescaled to Tr(V^2)/dim = 1."""
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"dim must be a power of two >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    V = (A + A.conj().T) / 2
    V *= np.sqrt(dim / np.real(np.vdot(V, V)))
    V.setflags(write=False)
    return GuePerturbation(V, float(delta), seed)


def semicircle_cdf(x):
    """CDF of the semicircle law for a GUE matrix with Tr(V^2)/dim = 1 (radius 2)."""
    x = np.clip(np.asarray(x, float) / 2, -1, 1)
    return 0.5 + (x * np.sqrt(1 - x**2) + np.arcsin(x)) / np.pi


@dataclass(frozen=True)
class InsertionPlan:
    placement: str = "after_each_gate"
    frame: str = "interaction_static"

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")

    def positions(self, schedule) -> list:
        """Pulse counts after which a perturbation acts (1-based pulse index)."""
        if self.placement == "after_each_pulse":
            return list(range(1, len(schedule.pulses) + 1))
        if not schedule.gates and schedule.pulses:
            raise ValueError("per-gate plan needs a schedule with gate markers")
        gates = list(schedule.gates)
        if gates and gates[-1].gate.kind == "T":
            gates = gates[:-1]
        return [g.stop for g in gates]


def insertion_count(plan: InsertionPlan, schedule) -> int:
    return len(plan.positions(schedule))


def insertion_unitaries(plan: InsertionPlan, V, delta: float, schedule) -> list:
    """(position, unitary) pairs; position counts pulses applied before it."""
    pert = V if isinstance(V, GuePerturbation) else GuePerturbation(np.asarray(V), delta)
    schedule.check_markers()
    if pert.dim != schedule.params.dim:
        raise ValueError(f"perturbation dim {pert.dim} does not match the chain dim {schedule.params.dim}")
    E = pert.unitary(delta)
    out = []
    pos = plan.positions(schedule)
    if plan.frame == "interaction_static":
        return [(m, E) for m in pos]
    eng = propagator_for(schedule.params)
    for m in pos:
        t = schedule.pulses[m - 1].t_end
        w = eng.lab_frame_factor(t)
        out.append((m, w.conj()[:, None] * E * w[None, :]))
    return out


def lab_insertion(pert: GuePerturbation, p, t: float, delta: float | None = None) -> np.ndarray:
    """W^dagger(t) exp(-i delta V) W(t) for a single time t."""
    w = propagator_for(p).lab_frame_factor(t)
    return w.conj()[:, None] * pert.unitary(delta) * w[None, :]


def effective_gate_perturbation(unitaries, V) -> np.ndarray:
    """sum_j U(j)^dagger V U(j) with U(j) = U_j ... U_1 the pulse prefixes of a gate.

    exp(-i d V) U_r ... exp(-i d V) U_1 = U_r ... U_1 exp(-i d sum_j V(j)) + O(d^2),
    so this is the generator of the whole gate's error to first order.
    """
    V = np.asarray(V)
    P = np.eye(V.shape[0], dtype=complex)
    G = np.zeros_like(V, dtype=complex)
    for U in unitaries:
        P = U @ P
        G += P.conj().T @ V @ P
    return (G + G.conj().T) / 2
