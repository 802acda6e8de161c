"""Bhattacharyya coefficient and distance between stored and incoming information.

The coefficient rho is the overlap sum(sqrt(p*q)) (or the corresponding
integral); the distance is -ln(rho), zero for identical distributions and
+inf for disjoint support.  Closed forms for univariate and multivariate
normals are cross-checked by an adaptive-Simpson quadrature oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import CategoricalDist, GaussianDist, MvnSummary

# Coefficient overshoot above 1 tolerated as floating-point noise; anything
# larger indicates a bug and is raised instead of clamped.
RHO_OVERSHOOT_TOLERANCE = 1e-12


class CholeskyError(ValueError):
    """A covariance failed to factor even after regularization."""

    def __init__(self, which: str, matrix: np.ndarray):
        super().__init__(f"covariance matrix ({which}) is not positive definite")
        self.which = which
        self.matrix = matrix


class QuadratureError(RuntimeError):
    """Adaptive integration ran out of subdivisions; carries the best estimate."""

    def __init__(self, message: str, best_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate


@dataclass(frozen=True)
class Divergence:
    """Overlap coefficient in [0, 1] paired with the distance -ln(rho)."""

    rho: float
    distance: float

    @staticmethod
    def from_rho(rho: float) -> Divergence:
        if rho > 1.0 + RHO_OVERSHOOT_TOLERANCE:
            raise ValueError(
                f"coefficient {rho!r} exceeds 1 beyond floating-point tolerance")
        if rho < -RHO_OVERSHOOT_TOLERANCE:
            raise ValueError(f"coefficient {rho!r} is negative beyond tolerance")
        rho = min(max(rho, 0.0), 1.0)
        distance = math.inf if rho == 0.0 else -math.log(rho)
        return Divergence(rho=rho, distance=max(distance, 0.0))

    @staticmethod
    def from_distance(distance: float) -> Divergence:
        if distance < 0:
            if distance < -RHO_OVERSHOOT_TOLERANCE:
                raise ValueError(f"distance {distance!r} is negative beyond tolerance")
            distance = 0.0
        rho = math.exp(-distance)
        return Divergence(rho=rho, distance=distance)


def bc_discrete(p: CategoricalDist, q: CategoricalDist) -> Divergence:
    """Overlap of two categorical distributions: rho = sum(sqrt(p_i * q_i))."""
    if p.vocab_size != q.vocab_size:
        raise ValueError(f"vocab size mismatch: {p.vocab_size} vs {q.vocab_size}")
    rho = float(np.sqrt(p.probs * q.probs).sum())
    return Divergence.from_rho(rho)


def bc_gaussian(p: GaussianDist, q: GaussianDist) -> Divergence:
    """Closed-form distance between two univariate normals.

    D = 1/4 ln(1/4 (sp^2/sq^2 + sq^2/sp^2 + 2)) + 1/4 (mp-mq)^2/(sp^2+sq^2),
    with s the standard deviation (squared here to get the variance).
    """
    vp = p.sigma * p.sigma
    vq = q.sigma * q.sigma
    term_var = 0.25 * math.log(0.25 * (vp / vq + vq / vp + 2.0))
    diff = p.mu - q.mu
    term_mean = 0.25 * diff * diff / (vp + vq)
    return Divergence.from_distance(term_var + term_mean)


def _cholesky(matrix: np.ndarray, which: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise CholeskyError(which, matrix) from None


def _log_det_from_cholesky(chol: np.ndarray) -> float:
    return 2.0 * float(np.log(np.diag(chol)).sum())


def bc_mvn(a: MvnSummary, b: MvnSummary) -> Divergence:
    """Closed-form distance between two multivariate normal summaries.

    D = 1/8 (mu1-mu2)^T S^-1 (mu1-mu2) + 1/2 ln(det S / sqrt(det S1 det S2))
    with S = (S1+S2)/2.  The quadratic term is a triangular solve against
    the Cholesky factor of S and the log-determinants come from the factor
    diagonals, so no raw determinant is ever formed.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    avg = (a.cov + b.cov) / 2.0
    chol_avg = _cholesky(avg, "average")
    chol_a = _cholesky(a.cov, "first")
    chol_b = _cholesky(b.cov, "second")

    diff = a.mean - b.mean
    y = np.linalg.solve(chol_avg, diff)
    term_mean = float(y @ y) / 8.0
    term_cov = 0.5 * (_log_det_from_cholesky(chol_avg)
                      - 0.5 * (_log_det_from_cholesky(chol_a)
                               + _log_det_from_cholesky(chol_b)))
    return Divergence.from_distance(term_mean + term_cov)


def bc_quadrature(
    density_p: Callable[[float], float],
    density_q: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_depth: int = 48,
) -> float:
    """Integrate sqrt(density_p * density_q) over [lo, hi] by adaptive Simpson.

    Serves as the independent oracle for the closed forms.  The interval
    must capture essentially all of both masses.  Raises QuadratureError
    (carrying the best estimate) if the tolerance is not reached within
    ``max_depth`` subdivision levels.
    """
    if not hi > lo:
        raise ValueError(f"need hi > lo, got [{lo}, {hi}]")

    def g(x: float) -> float:
        return math.sqrt(density_p(x) * density_q(x))

    def simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 6.0 * (fa + 4.0 * fm + fb)

    failures: list[float] = []

    def recurse(a: float, b: float, fa: float, fm: float, fb: float,
                whole: float, depth: int, tol: float) -> float:
        m = (a + b) / 2.0
        lm = (a + m) / 2.0
        rm = (m + b) / 2.0
        flm = g(lm)
        frm = g(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        err = (left + right - whole) / 15.0
        if abs(err) <= tol:
            return left + right + err
        if depth >= max_depth:
            failures.append(abs(err))
            return left + right + err
        return (recurse(a, m, fa, flm, fm, left, depth + 1, tol / 2.0)
                + recurse(m, b, fm, frm, fb, right, depth + 1, tol / 2.0))

    mid = (lo + hi) / 2.0
    f_lo, f_mid, f_hi = g(lo), g(mid), g(hi)
    whole = simpson(f_lo, f_mid, f_hi, hi - lo)
    value = recurse(lo, hi, f_lo, f_mid, f_hi, whole, 0, tol)
    if failures:
        raise QuadratureError(
            f"tolerance {tol} not reached on {len(failures)} subinterval(s) "
            f"after {max_depth} subdivision levels", best_estimate=value)
    return value


def bc_multi(dists: list[CategoricalDist]) -> float:
    """Overlap of M >= 2 categorical populations: sum_i (prod_j p_ji)^(1/M).

    Reduces to the pairwise coefficient at M = 2 and equals 1 when all
    inputs are identical.
    """
    if len(dists) < 2:
        raise ValueError(f"need at least 2 populations, got {len(dists)}")
    vocab = dists[0].vocab_size
    for d in dists[1:]:
        if d.vocab_size != vocab:
            raise ValueError(f"vocab size mismatch: {vocab} vs {d.vocab_size}")
    stacked = np.stack([d.probs for d in dists])
    rho = float(np.power(np.prod(stacked, axis=0), 1.0 / len(dists)).sum())
    if rho > 1.0 + RHO_OVERSHOOT_TOLERANCE:
        raise ValueError(f"coefficient {rho!r} exceeds 1 beyond floating-point tolerance")
    return min(max(rho, 0.0), 1.0)
