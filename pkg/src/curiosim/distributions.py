"""Distribution value types and estimation from sample batches.

Everything the comparison layer operates on: smoothed categorical
estimates, univariate Gaussians, multivariate normal summaries, and
mergeable sufficient statistics (raw sums, so merges are exact and the
n-1 normalization is applied only at conversion time).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Total extra probability mass spread uniformly over categories so that
# unseen categories keep the overlap coefficient well-defined.
CATEGORICAL_SMOOTHING = 1e-9

# Ridge scale for covariance regularization: lam = RIDGE * trace/dim.
COV_RIDGE = 1e-10


@dataclass(frozen=True)
class CategoricalDist:
    """Probabilities over ``vocab_size`` category classes."""

    vocab_size: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.shape != (self.vocab_size,):
            raise ValueError(
                f"probs must have shape ({self.vocab_size},), got {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1 within 1e-12, got {total!r}")


@dataclass(frozen=True)
class GaussianDist:
    """Univariate normal with mean ``mu`` and standard deviation ``sigma``."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class MvnSummary:
    """Mean vector and regularized covariance summarizing ``n`` samples."""

    dim: int
    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if mean.shape != (self.dim,):
            raise ValueError(f"mean must have shape ({self.dim},), got {mean.shape}")
        if cov.shape != (self.dim, self.dim):
            raise ValueError(
                f"cov must have shape ({self.dim}, {self.dim}), got {cov.shape}")
        if self.n < 0:
            raise ValueError(f"sample count must be >= 0, got {self.n}")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-10:
            raise ValueError("covariance must be symmetric within 1e-10")


@dataclass(frozen=True)
class SufficientStats:
    """Raw sums for a Gaussian summary; merging is exact componentwise addition."""

    n: int
    sum: np.ndarray
    sum_outer: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.sum, dtype=float)
        outer = np.asarray(self.sum_outer, dtype=float)
        object.__setattr__(self, "sum", s)
        object.__setattr__(self, "sum_outer", outer)
        if self.n < 0:
            raise ValueError(f"sample count must be >= 0, got {self.n}")
        if s.ndim != 1:
            raise ValueError("sum must be a vector")
        if outer.shape != (s.shape[0], s.shape[0]):
            raise ValueError(
                f"sum_outer must have shape ({s.shape[0]}, {s.shape[0]}), got {outer.shape}")

    @property
    def dim(self) -> int:
        return self.sum.shape[0]

    @staticmethod
    def empty(dim: int) -> SufficientStats:
        return SufficientStats(n=0, sum=np.zeros(dim), sum_outer=np.zeros((dim, dim)))


def estimate_categorical(samples, vocab_size: int) -> CategoricalDist:
    """Estimate category probabilities from indices with add-lambda smoothing.

    probs = (counts + lam/k) / (n + lam) with lam = 1e-9, i.e. a total mass
    of lam spread uniformly, then implicit renormalization via the divisor.
    """
    idx = np.asarray(samples, dtype=int)
    if idx.size == 0:
        raise ValueError("cannot estimate categorical probabilities from an empty sample")
    if np.any(idx < 0) or np.any(idx >= vocab_size):
        bad = idx[(idx < 0) | (idx >= vocab_size)][0]
        raise ValueError(f"category index {bad} out of range [0, {vocab_size})")
    counts = np.bincount(idx, minlength=vocab_size).astype(float)
    lam = CATEGORICAL_SMOOTHING
    probs = (counts + lam / vocab_size) / (idx.size + lam)
    return CategoricalDist(vocab_size=vocab_size, probs=probs)


def _regularize(cov: np.ndarray) -> np.ndarray:
    dim = cov.shape[0]
    trace = float(np.trace(cov))
    lam = COV_RIDGE * trace / dim if trace > 0 else COV_RIDGE
    return cov + lam * np.eye(dim)


def estimate_mvn(batch: np.ndarray) -> MvnSummary:
    """Summarize an n x d sample matrix as mean + unbiased ridge-regularized covariance."""
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2:
        raise ValueError(f"batch must be a 2-D sample matrix, got ndim={batch.ndim}")
    n, dim = batch.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples for a covariance, got {n}")
    mean = batch.mean(axis=0)
    centered = batch - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return MvnSummary(dim=dim, mean=mean, cov=_regularize(cov), n=n)


def stats_from_batch(batch: np.ndarray) -> SufficientStats:
    """Accumulate raw sums of an n x d sample matrix."""
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2:
        raise ValueError(f"batch must be a 2-D sample matrix, got ndim={batch.ndim}")
    outer = batch.T @ batch
    return SufficientStats(n=batch.shape[0], sum=batch.sum(axis=0),
                           sum_outer=(outer + outer.T) / 2.0)


def merge_stats(a: SufficientStats, b: SufficientStats) -> SufficientStats:
    """Combine two sets of sufficient statistics; exact, associative, commutative."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return SufficientStats(n=a.n + b.n, sum=a.sum + b.sum,
                           sum_outer=a.sum_outer + b.sum_outer)


def stats_to_mvn(stats: SufficientStats) -> MvnSummary:
    """Convert raw sums to a summary; needs n >= 2 for the covariance."""
    if stats.n < 2:
        raise ValueError(f"need at least 2 samples for a covariance, got {stats.n}")
    mean = stats.sum / stats.n
    cov = (stats.sum_outer - stats.n * np.outer(mean, mean)) / (stats.n - 1)
    cov = (cov + cov.T) / 2.0
    return MvnSummary(dim=stats.dim, mean=mean, cov=_regularize(cov), n=stats.n)
