"""Fidelity, perturbation generators, correlation sums, scaling fits and predictions.

Error scaling laws used for prediction (x = J/(k a), d = GUE strength):

    F_intrinsic = exp(-x^2 s_in(n)),  F_gue = exp(-d^2 s_gue(n)),  F_both = F_in F_gue

with the reference polynomials in REFERENCE_POLYNOMIALS (dict power -> coefficient).
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

# regime -> algorithm -> {power: coefficient}
REFERENCE_POLYNOMIALS = {
    "intrinsic": {"qft": {6: 280.0, 5: -660.0}, "iqft": {6: 1300.0, 5: -2100.0}},
    "gue_lab": {"qft": {2: 0.47, 1: 1.41, 0: -2.42}},
    "gue_int": {"qft": {3: 0.45, 2: -0.42, 1: 0.58}, "iqft": {2: 1.31, 1: 0.86, 0: -3.73}},
    "gue_pulse": {"qft": {5: 4.86, 4: 35.8}, "iqft": {4: 25.6, 3: 606.0}},
}
VALID_FROM = {"intrinsic": 5, "gue_lab": 3, "gue_int": 3, "gue_pulse": 3}
LINEAR_RESPONSE_LIMIT = 0.2


class OutOfValidityWarning(UserWarning):
    pass


class LinearResponseWarning(UserWarning):
    pass


# -- fidelity and generators -------------------------------------------------

def fidelity(psi, psi_delta):
    """|<psi_delta|psi>|^2; column-wise for 2-D inputs."""
    a = np.asarray(psi)
    b = np.asarray(psi_delta)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    ov = np.sum(b.conj() * a, axis=0)
    return np.clip(np.abs(ov) ** 2, 0.0, 1.0)


def haar_average_fidelity(U, U_ideal) -> float:
    """Mean state fidelity over Haar-random inputs: (|Tr M|^2 + d) / (d (d + 1))."""
    d = U.shape[0]
    t = np.trace(U_ideal.conj().T @ U)
    return float((abs(t) ** 2 + d) / (d * (d + 1)))


class BranchCutError(ValueError):
    pass


def extract_generator(U_ideal, U_perturbed, margin: float = 1e-6):
    """Hermitian G with exp(-i G) U_ideal = U_perturbed (principal logarithm)."""
    W = np.asarray(U_perturbed) @ np.asarray(U_ideal).conj().T
    # complex Schur form of a normal matrix is diagonal with unitary Z
    T, Z = schur(W, output="complex")
    theta = np.angle(np.diag(T))
    if np.any(np.pi - np.abs(theta) < margin):
        raise BranchCutError("perturbation has an eigenphase at the log branch cut (|G| near pi)")
    G = (Z * (-theta)) @ Z.conj().T
    return (G + G.conj().T) / 2


# -- correlations --------------------------------------------------------------

@dataclass
class CorrelationMatrix:
    C: np.ndarray
    averaging: str
    unit: str = "qpulse"
    markers: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(self.C.sum())

    def running_sum(self) -> np.ndarray:
        """S(t) = sum over t1, t2 <= t of C(t1, t2)."""
        C = self.C
        if C.size == 0:
            return np.zeros(0)
        row = np.cumsum(C, axis=1)
        # S(t) = S(t-1) + 2 sum_{t1<t} C(t1,t) + C(t,t)
        diag = np.diag(C)
        cross = np.array([row[t, t - 1] if t else 0.0 for t in range(len(C))])
        return np.cumsum(2 * cross + diag)

    def off_diagonal_mass(self) -> float:
        return float(np.abs(self.C).sum() - np.abs(np.diag(self.C)).sum())


def heisenberg_generators(generators, prefixes):
    """V_j(t) = U(j)^dagger G_j U(j) with U(j) the ideal product up to and including unit j."""
    return [P.conj().T @ G @ P for G, P in zip(generators, prefixes)]


def correlation_matrix(generators, prefixes, averaging: str = "trace", states=None,
                       unit: str = "qpulse", markers=None) -> CorrelationMatrix:
    """Connected correlation C(t1, t2) = <V1 V2> - <V1><V2> of propagated generators.

    averaging="trace" uses <X> = Tr X / dim; "states" averages <psi|X|psi> over the
    columns of `states` (random Gaussian states).  Only the real part enters the
    double sum, so C is returned symmetric and real.
    """
    A = heisenberg_generators(generators, prefixes)
    m = len(A)
    if m == 0:
        return CorrelationMatrix(np.zeros((0, 0)), averaging, unit, markers or [])
    d = A[0].shape[0]
    if averaging == "trace":
        flat = np.stack([a.reshape(-1) for a in A])
        flatT = np.stack([a.T.reshape(-1) for a in A])
        second = np.real(flat @ flatT.T) / d  # Tr(A_i A_j) / d
        mean = np.real(np.array([np.trace(a) for a in A])) / d
    elif averaging == "states":
        if states is None:
            raise ValueError("state averaging needs a block of states")
        S = np.asarray(states)
        ns = S.shape[1]
        AV = np.stack([a @ S for a in A])  # (m, d, ns)
        mean = np.real(np.einsum("ds,mds->m", S.conj(), AV)) / ns
        flat = AV.reshape(m, -1)
        second = np.real(flat.conj() @ flat.T) / ns
    else:
        raise ValueError(f"unknown averaging {averaging!r}")
    C = second - np.outer(mean, mean)
    C = (C + C.T) / 2
    return CorrelationMatrix(C, averaging, unit, markers or [])


def linear_response_fidelity(C, delta: float = 1.0):
    """(F, running sum) with F = 1 - delta^2 sum C."""
    cm = C if isinstance(C, CorrelationMatrix) else CorrelationMatrix(np.asarray(C, float), "given")
    run = cm.running_sum()
    loss = delta**2 * cm.total
    if loss > LINEAR_RESPONSE_LIMIT:
        warnings.warn(f"predicted 1-F = {loss:.3g} is outside linear response", LinearResponseWarning,
                      stacklevel=2)
    return 1.0 - loss, delta**2 * run


# -- reference predictions -------------------------------------------------------

def poly_eval(coeffs: dict, n):
    n = np.asarray(n, float)
    return sum(c * n**p for p, c in coeffs.items())


def error_polynomial(regime: str, algo: str, n):
    try:
        coeffs = REFERENCE_POLYNOMIALS[regime][algo.lower()]
    except KeyError:
        raise ValueError(f"no reference polynomial for regime {regime!r}, algo {algo!r}") from None
    if np.any(np.asarray(n) < VALID_FROM[regime]):
        warnings.warn(f"{regime} polynomial is fitted for n >= {VALID_FROM[regime]}", OutOfValidityWarning,
                      stacklevel=3)
    return poly_eval(coeffs, n)


def predicted_fidelity(regime: str, n, ka=None, delta=0.0, algo: str = "qft", gue: str = "gue_int",
                       polynomials=None):
    """Closed-form fidelity for regime in {intrinsic, gue_lab, gue_int, gue_pulse, both}.

    For "both" the intrinsic and the `gue` regime factors are multiplied.
    `polynomials` may override REFERENCE_POLYNOMIALS entries, e.g. with fitted ones.
    """
    polys = polynomials or {}

    def s(reg):
        if reg in polys:
            return poly_eval(polys[reg], n)
        return error_polynomial(reg, algo, n)

    def f_in():
        if ka is None:
            raise ValueError("intrinsic prediction needs ka")
        return np.exp(-s("intrinsic") / np.asarray(ka, float) ** 2)

    if regime == "intrinsic":
        return f_in()
    if regime in ("gue_lab", "gue_int", "gue_pulse"):
        return np.exp(-np.asarray(delta, float) ** 2 * s(regime))
    if regime == "both":
        if np.all(np.asarray(delta) == 0):
            return f_in()
        return f_in() * np.exp(-np.asarray(delta, float) ** 2 * s(gue))
    raise ValueError(f"unknown regime {regime!r}")


def drift_tolerance(a: float, n: int, omega: float, p: float) -> float:
    """Tolerable relative field drift a/da ~ a n^(p+2) / Omega for an error power p."""
    return a * n ** (p + 2) / omega


def nonresonant_strength(n, ka: float | None = None):
    """Non-resonant flip probability summed over spectator qubits and averaged over
    the driven one: (1/n) sum_{j != l} (J / (ka |j - l|))^2.

    Returned in units of (J/ka)^2 unless ka is given.
    """
    n = int(n)
    d = np.arange(1, n)
    s = float(2 * np.sum((n - d) / d**2) / n)
    return s if ka is None else s / float(ka) ** 2


def fit_strength_constant(ns) -> float:
    """alpha in nonresonant_strength(n) ~ pi^2/3 - alpha log(n) / n, by least squares over ns."""
    ns = np.asarray(list(ns), float)
    if np.any(ns < 2):
        raise ValueError("need n >= 2")
    x = np.log(ns) / ns
    y = np.pi**2 / 3 - np.array([nonresonant_strength(n) for n in ns])
    return float(np.dot(x, y) / np.dot(x, x))


# -- scaling fits ----------------------------------------------------------------

@dataclass
class ScalingFit:
    powers: tuple
    coefficients: tuple
    residual: float
    regime: str = ""

    @property
    def leading_power(self) -> int:
        nz = [p for p, c in zip(self.powers, self.coefficients) if c != 0]
        return max(nz) if nz else 0

    @property
    def leading_coefficient(self) -> float:
        return dict(zip(self.powers, self.coefficients))[self.leading_power]

    def as_dict(self) -> dict:
        return dict(zip(self.powers, self.coefficients))

    def __call__(self, n):
        return poly_eval(self.as_dict(), n)


def fit_error_polynomial(samples, candidate_powers=range(0, 8), regime: str = "", powers=None,
                         weights=None, positive_leading: bool = True, min_term_fraction: float = 0.1) -> ScalingFit:
    """Least-squares fit of y(n) with the best one or two monomials.

    Residuals are relative (y scaled out) so that small-n points count as much as
    large-n ones.  A single monomial is preferred when it fits as well as any pair.
    With positive_leading, candidate sets whose highest power has a negative
    coefficient are skipped: an error that eventually decreases with n is not a
    growth law, and such fits only chase noise.  Likewise a pair in which one term
    never exceeds min_term_fraction of |y| is skipped (the single monomial covers it).
    """
    n, y = (np.asarray(v, float) for v in zip(*samples))
    if len(np.unique(n)) < 4:
        raise ValueError("need at least 4 distinct n values")
    w = 1 / np.abs(y) if weights is None else np.asarray(weights, float)
    if not np.all(np.isfinite(w)):
        w = np.ones_like(y)
    cands = [tuple(powers)] if powers is not None else (
        [(p,) for p in candidate_powers] + list(itertools.combinations(sorted(candidate_powers), 2)))
    best = None
    for ps in cands:
        X = np.stack([n**p for p in ps], axis=1) * w[:, None]
        if np.linalg.matrix_rank(X) < len(ps):
            continue
        c, *_ = np.linalg.lstsq(X, y * w, rcond=None)
        if powers is None and len(ps) > 1:
            if positive_leading and c[int(np.argmax(ps))] < 0 and np.any(y > 0):
                continue
            share = [np.max(np.abs(ci * n**p / y)) for ci, p in zip(c, ps)]
            if min(share) < min_term_fraction:
                continue
        r = float(np.sqrt(np.mean((X @ c - y * w) ** 2)))
        tol = 1e-9 * (1 + (best[2] if best else 0))
        if best is None or r < best[2] - tol or (abs(r - best[2]) <= tol and len(ps) < len(best[0])):
            best = (ps, c, r)
    if best is None:
        raise ValueError("degenerate design matrix for every candidate set")
    ps, c, r = best
    order = np.argsort(ps)[::-1]
    return ScalingFit(tuple(int(ps[i]) for i in order), tuple(float(c[i]) for i in order), r, regime)


def log_log_slope(x, y) -> float:
    """Slope of log y against log x by least squares."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# -- QFT / IQFT crossover ------------------------------------------------------------

def delta_crit(n, ka, gue: str = "gue_int", polynomials=None):
    """GUE strength where QFT and IQFT predictions cross; nan where they never do.

    From F_QFT = F_IQFT: delta^2 (s_gue_QFT - s_gue_IQFT) = (s_in_IQFT - s_in_QFT) / ka^2.
    Above delta_crit IQFT is better.
    """
    polys = polynomials or REFERENCE_POLYNOMIALS
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfValidityWarning)
        din = poly_eval(polys["intrinsic"]["iqft"], n) - poly_eval(polys["intrinsic"]["qft"], n)
        dg = poly_eval(polys[gue]["qft"], n) - poly_eval(polys[gue]["iqft"], n)
    ratio = np.asarray(din / dg, float)
    ok = (ratio > 0) & np.isfinite(ratio)
    out = np.where(ok, np.sqrt(np.where(ok, ratio, 1.0)) / np.asarray(ka, float), np.nan)
    return float(out) if out.ndim == 0 else out


def _both(algo, n, ka, delta, gue="gue_int"):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfValidityWarning)
        return predicted_fidelity("both", n, ka, delta, algo, gue)


def crossover_scan(ns, kas, deltas, gue: str = "gue_int") -> list:
    """Rows (n, ka, delta, F_qft, F_iqft, best, delta_crit) over the full grid."""
    rows = []
    for n in ns:
        for ka in kas:
            dc = delta_crit(n, ka, gue)
            for d in deltas:
                fq, fi = float(_both("qft", n, ka, d, gue)), float(_both("iqft", n, ka, d, gue))
                rows.append({"n": n, "ka": ka, "delta": d, "F_qft": fq, "F_iqft": fi,
                             "best": "qft" if fq >= fi else "iqft", "delta_crit": dc})
    return rows


def contour_delta(algo: str, level: float, n, ka, gue: str = "gue_int"):
    """delta on the F = level curve at given (n, ka); nan where no delta >= 0 reaches it."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfValidityWarning)
        s_in = error_polynomial("intrinsic", algo, n)
        s_g = error_polynomial(gue, algo, n)
    L = -np.log(level)
    rad = (L - s_in / np.asarray(ka, float) ** 2) / s_g
    return np.where(rad >= 0, np.sqrt(np.abs(rad)), np.nan)


def contour_ka_delta(level: float, n, kas, gue: str = "gue_int") -> list:
    """Constant-fidelity curve of the better algorithm in the (ka, delta) plane.

    For each ka the admissible delta is the larger of the two algorithms' curves;
    the segment label says which algorithm attains it.
    """
    rows = []
    for ka in kas:
        dq = float(contour_delta("qft", level, n, ka, gue))
        di = float(contour_delta("iqft", level, n, ka, gue))
        if np.isnan(dq) and np.isnan(di):
            continue
        best = "iqft" if np.isnan(dq) or (not np.isnan(di) and di > dq) else "qft"
        rows.append({"level": level, "n": n, "ka": ka, "delta": di if best == "iqft" else dq, "best": best})
    return rows


def contour_asymptotes(level: float, n, algo: str, gue: str = "gue_int") -> dict:
    """ka below which F = level is unreachable even at delta = 0, and the delta it tends to as ka -> inf."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfValidityWarning)
        s_in = error_polynomial("intrinsic", algo, n)
        s_g = error_polynomial(gue, algo, n)
    L = -np.log(level)
    return {"ka_min": float(np.sqrt(s_in / L)) if s_in > 0 else 0.0, "delta_max": float(np.sqrt(L / s_g))}


def max_qubits(level: float, ka: float, delta: float = 0.0, n_max: int = 64, gue: str = "gue_int"):
    """Largest n with max(F_QFT, F_IQFT) >= level, and the algorithm achieving it."""
    best = (None, None)
    for n in range(2, n_max + 1):
        fq, fi = float(_both("qft", n, ka, delta, gue)), float(_both("iqft", n, ka, delta, gue))
        if max(fq, fi) >= level:
            best = (n, "qft" if fq >= fi else "iqft")
    return best
