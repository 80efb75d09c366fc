"""Closed-form spectral-gap functionals and operator-norm estimators.

The gap functional K_{n,p} drives everything: it decides whether the
fixed-point construction is expected to contract, it prices the sin-theta
bound, and its mu-variant prices the eigenvalue-domination check. The
operator-norm estimators certify contraction (upper bounds, interpolated)
and probe mixed-norm scaling (lower bounds, multistart projected ascent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import rng_from_stream
from .errors import InvalidSpectrumError
from .matcore import Spectrum, dual_exponent, lp_norm, operator_norm_exact

__all__ = [
    "AssumptionReport",
    "gap_vector",
    "conjugate_gap_norm",
    "k_np",
    "default_p_grid",
    "best_p",
    "davis_kahan_bound",
    "rs_sin_theta_bound",
    "mu_assumption",
    "ellipsoid_covering_bound",
    "opnorm_pp_upper",
    "opnorm_lower",
    "opnorm_dual_lower",
    "assumption_report",
]

DEFAULT_C0 = 0.1
REFERENCE_NOISE_SCALE = 2.0  # times sqrt(n): typical spectral norm of unit-variance noise


def gap_vector(spectrum: Spectrum) -> np.ndarray:
    """Reciprocal gaps d_j = 1/(lambda1 - lambda_{j+1}), length n-1."""
    gaps = spectrum.gaps()
    if np.any(gaps <= 0):
        raise InvalidSpectrumError("gap vector needs lambda1 > lambda_j for every j > 1")
    return 1.0 / gaps


def conjugate_gap_norm(d: np.ndarray, p: float) -> float:
    """||d||_{p/(p-2)}, read as the inf-norm at p=2 and the 1-norm at p=inf."""
    if p == 2:
        return lp_norm(d, math.inf)
    if p == math.inf:
        return lp_norm(d, 1)
    return lp_norm(d, p / (p - 2.0))


def k_np(spectrum: Spectrum, p: float) -> float:
    """Gap functional: sqrt(p log n) n^(1/p) ||d||_{p/(p-2)}, or log n ||d||_1 at p=inf."""
    if p < 2:
        raise ValueError(f"k_np requires p >= 2, got {p}")
    n = spectrum.n
    d = gap_vector(spectrum)
    if p == math.inf:
        return math.log(n) * lp_norm(d, 1)
    return math.sqrt(p * math.log(n)) * n ** (1.0 / p) * conjugate_gap_norm(d, p)


def default_p_grid(n: int, points: int = 32) -> list[float]:
    """Geometric grid of exponents in [2, max(2, log n)], plus infinity.

    Exponents above log n are redundant up to constants, so the grid stops
    there and lets the explicit infinity entry cover the large-p regime.
    """
    top = max(2.0, math.log(n))
    if top == 2.0:
        grid = [2.0]
    else:
        grid = list(np.geomspace(2.0, top, points))
    grid.append(math.inf)
    return grid


def best_p(spectrum: Spectrum, grid: list[float] | None = None) -> tuple[float, float]:
    """Argmin and min of k_np over the exponent grid."""
    if grid is None:
        grid = default_p_grid(spectrum.n)
    if not grid:
        raise ValueError("empty exponent grid")
    vals = [(k_np(spectrum, p), p) for p in grid]
    k_star, p_star = min(vals, key=lambda t: t[0])
    return p_star, k_star


def davis_kahan_bound(spectrum: Spectrum, e_norm: float) -> float:
    """Classical l2 comparator ||E||_2 / (lambda1 - lambda2)."""
    if e_norm < 0:
        raise ValueError("noise norm must be nonnegative")
    return e_norm / spectrum.delta


def rs_sin_theta_bound(spectrum: Spectrum, C: float) -> float:
    """sin-theta bound C sqrt(log n) ( sum_{j>=2} (lambda1-lambda_j)^-2 )^(1/2)."""
    if not C > 0:
        raise ValueError("constant must be positive")
    return C * math.sqrt(math.log(spectrum.n)) * lp_norm(gap_vector(spectrum), 2)


def mu_assumption(mu: np.ndarray, p: float) -> float:
    """Gap functional with reciprocal diagonal weights 1/mu in place of d."""
    mu = np.asarray(mu, dtype=np.float64)
    if mu.size == 0 or np.any(mu <= 0):
        raise ValueError("mu must be a nonempty positive vector")
    if p < 2:
        raise ValueError(f"mu_assumption requires p >= 2, got {p}")
    n = mu.size
    inv = 1.0 / mu
    if p == math.inf:
        return math.log(n) * lp_norm(inv, 1)
    return math.sqrt(p * math.log(n)) * n ** (1.0 / p) * conjugate_gap_norm(inv, p)


def ellipsoid_covering_bound(a: np.ndarray, theta: float, c_bar: float = math.e) -> float:
    """Metric-entropy bound for covering an ellipsoid with unit balls.

    log N <= sum_{j in J} log a_j + |J_theta| log(c_bar / theta) where
    J = {a_j > 1} and J_theta = {a_j^2 >= 1 - theta}. An empty J contributes 0.
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a <= 0):
        raise ValueError("ellipsoid semi-axes must be positive")
    if not 0.0 < theta < 0.5:
        raise ValueError("theta must lie in (0, 1/2)")
    big = a[a > 1.0]
    wide = int(np.count_nonzero(a * a >= 1.0 - theta))
    first = float(np.log(big).sum()) if big.size else 0.0
    return first + wide * math.log(c_bar / theta)


def opnorm_pp_upper(M: np.ndarray, p: float) -> float:
    """Certified upper bound on ||M||_{p,p} via Riesz-Thorin interpolation.

    ||M||_{p,p} <= ||M||_{1,1}^(1/p) ||M||_{inf,inf}^(1-1/p); exact at the
    endpoints, and tightened with the exact spectral norm at p=2.
    """
    if p < 1:
        raise ValueError(f"opnorm_pp_upper requires p >= 1, got {p}")
    n1 = operator_norm_exact(M, 1)
    ninf = operator_norm_exact(M, math.inf)
    if p == 1:
        return n1
    if p == math.inf:
        return ninf
    interp = n1 ** (1.0 / p) * ninf ** (1.0 - 1.0 / p)
    if p == 2:
        return min(interp, operator_norm_exact(M, 2))
    return interp


# ---------------------------------------------------------------------------
# Mixed-norm lower bounds by projected ascent
# ---------------------------------------------------------------------------

def _dual_vector(z: np.ndarray, a: float) -> np.ndarray:
    """Maximizer of Re<z, u> over the unit lp ball ||u||_a <= 1."""
    mags = np.abs(z)
    if mags.max() == 0.0:
        out = np.zeros_like(z)
        out[0] = 1.0
        return out
    phase = np.where(mags == 0, 1.0, z / np.where(mags == 0, 1.0, mags))
    if a == 1:
        out = np.zeros_like(z)
        k = int(mags.argmax())
        out[k] = phase[k]
        return out
    if a == math.inf:
        return phase.astype(z.dtype)
    u = phase * (mags / mags.max()) ** (1.0 / (a - 1.0))
    return u / lp_norm(u, a)


def _norm_subgradient(y: np.ndarray, b: float) -> np.ndarray:
    """Direction psi with ||y||_b = Re<psi, y> / ||psi||_{b'}; scale is irrelevant."""
    mags = np.abs(y)
    phase = np.where(mags == 0, 1.0, y / np.where(mags == 0, 1.0, mags))
    if b == math.inf:
        out = np.zeros_like(y)
        k = int(mags.argmax())
        out[k] = phase[k]
        return out
    if b == 1:
        return phase.astype(y.dtype)
    return phase * (mags / max(mags.max(), 1e-300)) ** (b - 1.0)


def opnorm_lower(
    M: np.ndarray,
    p_dom: float,
    p_tgt: float,
    restarts: int = 8,
    seed: int = 0,
    max_iter: int = 500,
    rtol: float = 1e-12,
) -> float:
    """Lower bound on ||M||_{p_dom, p_tgt} = sup{||Mu||_p_tgt : ||u||_p_dom <= 1}.

    Multistart conditional-gradient ascent: each step replaces u by the
    maximizer of the linearized objective over the unit ball, so the value is
    nondecreasing and every iterate certifies a valid lower bound. One start
    is the best coordinate vector, the rest are random.
    """
    M = np.atleast_2d(np.asarray(M))
    if restarts < 1:
        raise ValueError("restarts >= 1 required")
    if not np.abs(M).max() > 0:
        return 0.0
    rng = rng_from_stream(seed)
    n = M.shape[1]
    complex_input = np.iscomplexobj(M)

    best_col = np.zeros(n, dtype=M.dtype)
    best_col[int(np.argmax([lp_norm(M[:, j], p_tgt) for j in range(n)]))] = 1.0
    starts = [best_col]
    for _ in range(restarts - 1):
        u = rng.standard_normal(n)
        if complex_input:
            u = u + 1j * rng.standard_normal(n)
        starts.append(u / lp_norm(u, p_dom))

    best = 0.0
    for u in starts:
        val = 0.0
        for _ in range(max_iter):
            y = M @ u
            new_val = lp_norm(y, p_tgt)
            if new_val <= val * (1.0 + rtol):
                val = max(val, new_val)
                break
            val = new_val
            u = _dual_vector(M.conj().T @ _norm_subgradient(y, p_tgt), p_dom)
        best = max(best, val)
    return best


def opnorm_dual_lower(M: np.ndarray, p: float, restarts: int = 8, seed: int = 0) -> float:
    """Lower bound on the dual-paired norm sup{||Mu||_p : ||u||_{p'} <= 1}, p in [2, inf)."""
    if not 2.0 <= p < math.inf:
        raise ValueError(f"opnorm_dual_lower requires p in [2, inf), got {p}")
    return opnorm_lower(M, dual_exponent(p), p, restarts=restarts, seed=seed)


# ---------------------------------------------------------------------------
# Assumption report
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    """Per-exponent table of the gap functional plus the advisory verdict.

    dk_bound is the Davis-Kahan comparator at the reference noise norm
    2 sqrt(n); rs_l2_bound is the sin-theta bound at reference constant C=1.
    """

    n: int
    c0: float
    d: list[float]
    table: list[dict]
    best_p: float
    k_best: float
    satisfied: bool
    dk_bound: float
    rs_l2_bound: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "c0": self.c0,
            "d": self.d,
            "table": self.table,
            "best_p": self.best_p,
            "k_best": self.k_best,
            "satisfied": self.satisfied,
            "dk_bound": self.dk_bound,
            "rs_l2_bound": self.rs_l2_bound,
        }


def assumption_report(
    spectrum: Spectrum,
    c0: float = DEFAULT_C0,
    grid: list[float] | None = None,
) -> AssumptionReport:
    """Evaluate the gap functional over an exponent grid and issue the verdict."""
    n = spectrum.n
    if grid is None:
        grid = default_p_grid(n)
    d = gap_vector(spectrum)
    table = []
    for p in grid:
        np_norm = conjugate_gap_norm(d, p) * (1.0 if p == math.inf else n ** (1.0 / p))
        table.append({"p": p, "np_norm": np_norm, "k": k_np(spectrum, p)})
    p_star, k_star = best_p(spectrum, grid)
    return AssumptionReport(
        n=n,
        c0=c0,
        d=[float(x) for x in d],
        table=table,
        best_p=p_star,
        k_best=k_star,
        satisfied=bool(k_star <= c0),
        dk_bound=davis_kahan_bound(spectrum, REFERENCE_NOISE_SCALE * math.sqrt(n)),
        rs_l2_bound=rs_sin_theta_bound(spectrum, 1.0),
    )
