"""Fidelity experiments: intrinsic errors, GUE perturbations and both together.

Seeds: a base seed spawns one child per realization (numpy SeedSequence); each
child spawns the GUE seed and the state-ensemble seed, so QFT and IQFT runs with
the same base seed see the same perturbation and the same input states.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .analysis import extract_generator, fidelity, haar_average_fidelity
from .chain import ChainParams, random_gaussian_state
from .compiler import PulseSchedule, compile_algorithm
from .dynamics import evolve, propagator_for, schedule_unitary
from .errors import InsertionPlan, sample_gue
from .ideal import ideal_algorithm_unitary, ideal_gate_matrix
from .qpulse import ideal_qpulse_matrix


@dataclass
class FidelityStats:
    """Fidelity over realizations x states; stderr is over realization means."""

    per_realization: np.ndarray
    n_states: int
    seeds: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_realization))

    @property
    def stderr(self) -> float:
        r = len(self.per_realization)
        return float(np.std(self.per_realization, ddof=1) / np.sqrt(r)) if r > 1 else 0.0

    @property
    def realizations(self) -> int:
        return len(self.per_realization)


def realization_seeds(seed: int, realizations: int) -> list:
    """(gue_seed, state_seed) integer pairs for each realization."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(realizations):
        a, b = child.spawn(2)
        out.append((int(a.generate_state(1)[0]), int(b.generate_state(1)[0])))
    return out


@lru_cache(maxsize=16)
def _compiled(algo: str, n: int, a: float, k: int) -> PulseSchedule:
    return compile_algorithm(algo, ChainParams(n=n, a=a, k=k))


def compiled_schedule(algo: str, p: ChainParams) -> PulseSchedule:
    """Compiled protocol, memoized per (algo, n, a, k)."""
    return _compiled(algo.lower(), p.n, p.a, p.k)


def gate_unitaries(schedule: PulseSchedule) -> list:
    """Interaction-frame propagator of every compiled gate."""
    return [schedule_unitary(schedule, start=g.start, stop=g.stop) for g in schedule.gates]


def ideal_gate_unitaries(schedule: PulseSchedule) -> list:
    return [ideal_gate_matrix(g.gate, schedule.params.n) for g in schedule.gates]


# -- intrinsic -------------------------------------------------------------------

def intrinsic_fidelity(algo: str, p: ChainParams) -> float:
    """Haar-averaged fidelity of the compiled protocol against the ideal one."""
    U = schedule_unitary(compiled_schedule(algo, p))
    return haar_average_fidelity(U, ideal_algorithm_unitary(algo, p.n))


def qpulse_generators(schedule: PulseSchedule):
    """Per Q-pulse error generators and ideal prefix products U(j).

    The generator of Q-pulse j satisfies exp(-i G_j) U_ideal_j = U_exact_j.
    """
    p = schedule.params
    eng = propagator_for(p)
    gens, prefixes = [], []
    P = np.eye(p.dim, dtype=complex)
    for qs in schedule.qpulses:
        U = np.eye(p.dim, dtype=complex)
        for pl in schedule.pulses[qs.start:qs.stop]:
            U = eng.interaction_unitary(pl) @ U
        Ui = ideal_qpulse_matrix(qs.spec, p.n, p.k, p.J)
        gens.append(extract_generator(Ui, U))
        P = Ui @ P
        prefixes.append(P.copy())
    return gens, prefixes


# -- GUE and combined runs ----------------------------------------------------------

@dataclass(frozen=True)
class GueRun:
    """One experiment setting.

    gates: "ideal" uses exact gate matrices (GUE-only effects), "compiled" the
    pulse propagators, "pulses" steps through raw pulses (needed per pulse).
    reference: "unperturbed" compares with the same engine at delta = 0,
    "ideal" with the ideal algorithm (so intrinsic errors count too).
    """

    algo: str
    params: ChainParams
    delta: float
    plan: InsertionPlan = InsertionPlan()
    gates: str = "ideal"
    reference: str = "unperturbed"


def _insertion_ops(run: GueRun, sched: PulseSchedule, pert):
    """Map position -> insertion unitary (positions counted in pulses)."""
    if run.plan.frame == "interaction_static":
        E = pert.unitary(run.delta)
        return {m: E for m in run.plan.positions(sched)}, E
    eng = propagator_for(sched.params)
    E = pert.unitary(run.delta)
    ops = {}
    for m in run.plan.positions(sched):
        w = eng.lab_frame_factor(sched.pulses[m - 1].t_end)
        ops[m] = w.conj()[:, None] * E * w[None, :]
    return ops, E


def _product(Us):
    P = np.eye(Us[0].shape[0], dtype=complex)
    for U in Us:
        P = U @ P
    return P


def _run_gates(Us, sched, ops, psi):
    for U, g in zip(Us, sched.gates):
        psi = U @ psi
        E = ops.get(g.stop)
        if E is not None:
            psi = E @ psi
    return psi


def _run_pulses(sched, ops, psi):
    def hook(m, x):
        E = ops.get(m + 1)
        return x if E is None else E @ x
    return evolve(psi, sched, after_pulse=hook)


def run_gue(run: GueRun, realizations: int = 20, states: int = 20, seed: int = 0) -> FidelityStats:
    """Mean fidelity per realization of a perturbed protocol."""
    p = run.params
    sched = compiled_schedule(run.algo, p)
    if run.plan.placement == "after_each_pulse" and run.gates != "pulses":
        raise ValueError("per-pulse insertion needs gates='pulses'")
    Us = None
    if run.gates == "ideal":
        Us = ideal_gate_unitaries(sched)
    elif run.gates == "compiled":
        Us = gate_unitaries(sched)
    elif run.gates != "pulses":
        raise ValueError(f"unknown gate engine {run.gates!r}")
    U_ideal = ideal_algorithm_unitary(run.algo, p.n)
    U_ref = U_ideal
    if run.reference == "unperturbed":
        U_ref = schedule_unitary(sched) if Us is None else _product(Us)
    elif run.reference != "ideal":
        raise ValueError(f"unknown reference {run.reference!r}")
    seeds = realization_seeds(seed, realizations)
    out = np.empty(realizations)
    for r, (gs, ss) in enumerate(seeds):
        pert = sample_gue(p.dim, gs, run.delta)
        psi0 = random_gaussian_state(p.n, ss, size=states)
        ops, _ = _insertion_ops(run, sched, pert)
        psi = _run_gates(Us, sched, ops, psi0) if Us is not None else _run_pulses(sched, ops, psi0)
        out[r] = float(np.mean(fidelity(U_ref @ psi0, psi)))
    return FidelityStats(out, states, seeds)


# -- GUE ensemble expectation ------------------------------------------------------------

def insertion_prefixes(run: GueRun) -> list:
    """Frame-adjusted prefix X_j with the j-th insertion acting as X_j^dagger V X_j.

    X_j = W(t_j) U(j) for lab-static insertions and U(j) otherwise, where U(j) is
    the unperturbed propagator up to the insertion (ideal gates, compiled gates or
    raw pulses following run.gates).
    """
    p = run.params
    sched = compiled_schedule(run.algo, p)
    pos = run.plan.positions(sched)
    if run.gates == "pulses":
        eng = propagator_for(p)
        P = np.eye(p.dim, dtype=complex)
        pref = []
        for pl in sched.pulses:
            P = eng.interaction_unitary(pl) @ P
            pref.append(P)
    else:
        Us = ideal_gate_unitaries(sched) if run.gates == "ideal" else gate_unitaries(sched)
        pref_at = {}
        P = np.eye(p.dim, dtype=complex)
        for U, g in zip(Us, sched.gates):
            P = U @ P
            pref_at[g.stop] = P
        pref = [pref_at.get(m) for m in range(1, len(sched.pulses) + 1)]
    out = []
    eng = propagator_for(p)
    for m in pos:
        X = pref[m - 1]
        if run.plan.frame == "lab_static":
            X = eng.lab_frame_factor(sched.pulses[m - 1].t_end)[:, None] * X
        out.append(X)
    return out


def gue_expected_loss(prefixes, block: int = 2048) -> float:
    """GUE and Haar-state average of sum C for insertions X_j^dagger V X_j.

    For E[V_ab V_cd] = delta_ad delta_bc / d one has
    E[sum C] = (sum_ij |Tr X_i X_j^dagger|^2 - m^2) / d^2, and averaging over Haar
    states instead of the trace adds the factor d / (d + 1).  Multiplied by
    delta^2 this is the linear-response 1 - F.
    """
    m = len(prefixes)
    if m == 0:
        return 0.0
    d = prefixes[0].shape[0]
    F = np.stack([X.reshape(-1) for X in prefixes]).astype(np.complex64)
    tot = 0.0
    for i in range(0, m, block):
        G = (F[i:i + block].conj() @ F.T).astype(np.complex128)
        tot += float(np.sum(np.abs(G) ** 2))
    return (tot - m**2) / d**2 * d / (d + 1)
