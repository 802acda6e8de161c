"""Random-projection dimension reduction with verified distortion bounds.

A target dimension k >= 4 ln(n) / (eps^2/2 - eps^3/3) admits a linear map
x -> (1/sqrt(k)) A x, A a k x d matrix of i.i.d. standard normals, that
preserves all pairwise squared distances of n points within (1 +/- eps).
A single draw is not guaranteed to succeed, so maps are drawn and checked
against the all-pairs bound until one passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class MapSearchError(RuntimeError):
    """No drawn map passed verification; carries the best ratios observed."""

    def __init__(self, message: str, best_ratio_low: float, best_ratio_high: float):
        super().__init__(message)
        self.best_ratio_low = best_ratio_low
        self.best_ratio_high = best_ratio_high


@dataclass(frozen=True)
class JlMap:
    """A k x d Gaussian projection applied with scale 1/sqrt(k).

    When k >= d would be required, the map degenerates to the identity
    (``matrix`` is None): reduction only ever shrinks dimension, and the
    identity has zero distortion.
    """

    d: int
    k: int
    epsilon: float
    matrix: np.ndarray | None
    seed: int | None = None  # retained when drawn from a seed, for compact serialization

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.k < 1:
            raise ValueError(f"target dimension must be >= 1, got {self.k}")
        if self.matrix is None:
            if self.k != self.d:
                raise ValueError("identity map requires k == d")
        else:
            matrix = np.asarray(self.matrix, dtype=float)
            object.__setattr__(self, "matrix", matrix)
            if matrix.shape != (self.k, self.d):
                raise ValueError(
                    f"matrix must have shape ({self.k}, {self.d}), got {matrix.shape}")

    @property
    def is_identity(self) -> bool:
        return self.matrix is None

    @property
    def scale(self) -> float:
        return 1.0 if self.matrix is None else 1.0 / math.sqrt(self.k)

    @staticmethod
    def draw(d: int, k: int, epsilon: float, rng: np.random.Generator) -> JlMap:
        """Draw a fresh map with i.i.d. N(0, 1) entries."""
        return JlMap(d=d, k=k, epsilon=epsilon, matrix=rng.standard_normal((k, d)))

    @staticmethod
    def from_seed(d: int, k: int, epsilon: float, seed: int) -> JlMap:
        """Deterministically draw a map from an integer seed (reproducible)."""
        matrix = np.random.default_rng(seed).standard_normal((k, d))
        return JlMap(d=d, k=k, epsilon=epsilon, matrix=matrix, seed=seed)

    @staticmethod
    def identity(d: int, epsilon: float) -> JlMap:
        return JlMap(d=d, k=d, epsilon=epsilon, matrix=None)


@dataclass(frozen=True)
class VerifyReport:
    """All-pairs distortion check result."""

    ok: bool
    worst_ratio_low: float   # smallest projected/original squared-distance ratio
    worst_ratio_high: float  # largest such ratio
    pairs_checked: int
    pairs_skipped: int       # coincident pairs, vacuously within bounds


@dataclass(frozen=True)
class MapSearch:
    """A verified map and the number of draws it took."""

    map: JlMap
    attempts: int


def jl_min_dimension(n: int, epsilon: float) -> int:
    """Smallest admissible target dimension for n points at distortion epsilon.

    ceil(4 ln(n) / (eps^2/2 - eps^3/3)); decreasing in epsilon, increasing
    in n, and independent of the source dimension.
    """
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    denom = epsilon * epsilon / 2.0 - epsilon ** 3 / 3.0
    return int(math.ceil(4.0 * math.log(n) / denom))


def apply(jl_map: JlMap, x: np.ndarray) -> np.ndarray:
    """Project a d-vector to k dimensions: (1/sqrt(k)) A x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (jl_map.d,):
        raise ValueError(f"expected a vector of length {jl_map.d}, got shape {x.shape}")
    if jl_map.is_identity:
        return x.copy()
    return jl_map.scale * (jl_map.matrix @ x)


def apply_rows(jl_map: JlMap, points: np.ndarray) -> np.ndarray:
    """Project each row of an n x d matrix."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != jl_map.d:
        raise ValueError(
            f"expected an n x {jl_map.d} matrix, got shape {points.shape}")
    if jl_map.is_identity:
        return points.copy()
    return jl_map.scale * (points @ jl_map.matrix.T)


def verify(jl_map: JlMap, points: np.ndarray) -> VerifyReport:
    """Brute-force check of the squared-distance sandwich over all pairs.

    ok iff (1-eps) ||u-v||^2 <= ||f(u)-f(v)||^2 <= (1+eps) ||u-v||^2 for
    every non-coincident pair; coincident pairs hold vacuously.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("need an n x d matrix with n >= 2")
    projected = apply_rows(jl_map, points)
    n = points.shape[0]
    worst_low = math.inf
    worst_high = -math.inf
    checked = 0
    skipped = 0
    for i in range(n):
        du = points[i] - points[i + 1:]
        dv = projected[i] - projected[i + 1:]
        orig = np.einsum("ij,ij->i", du, du)
        proj = np.einsum("ij,ij->i", dv, dv)
        live = orig > 0.0
        skipped += int((~live).sum())
        if not np.any(live):
            continue
        ratios = proj[live] / orig[live]
        worst_low = min(worst_low, float(ratios.min()))
        worst_high = max(worst_high, float(ratios.max()))
        checked += int(live.sum())
    if checked == 0:
        return VerifyReport(ok=True, worst_ratio_low=1.0, worst_ratio_high=1.0,
                            pairs_checked=0, pairs_skipped=skipped)
    ok = worst_low >= 1.0 - jl_map.epsilon and worst_high <= 1.0 + jl_map.epsilon
    return VerifyReport(ok=ok, worst_ratio_low=worst_low, worst_ratio_high=worst_high,
                        pairs_checked=checked, pairs_skipped=skipped)


def find_valid_map(
    points: np.ndarray,
    epsilon: float,
    max_retries: int = 16,
    rng: np.random.Generator | None = None,
) -> MapSearch:
    """Draw Gaussian maps at the minimal admissible k until one verifies.

    When the bound demands k >= d the identity map is returned immediately
    (zero distortion).  Raises MapSearchError after ``max_retries`` failed
    draws, carrying the best worst-ratios seen.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("need an n x d matrix with n >= 2")
    if max_retries < 1:
        raise ValueError(f"max_retries must be >= 1, got {max_retries}")
    n, d = points.shape
    k = jl_min_dimension(n, epsilon)
    if k >= d:
        return MapSearch(map=JlMap.identity(d, epsilon), attempts=0)
    if rng is None:
        rng = np.random.default_rng()

    best_low = -math.inf
    best_high = math.inf
    for attempt in range(1, max_retries + 1):
        candidate = JlMap.draw(d, k, epsilon, rng)
        report = verify(candidate, points)
        if report.ok:
            return MapSearch(map=candidate, attempts=attempt)
        # Track the draw whose ratios came closest to the sandwich.
        if (report.worst_ratio_low > best_low or
                (report.worst_ratio_low == best_low and report.worst_ratio_high < best_high)):
            best_low = report.worst_ratio_low
            best_high = report.worst_ratio_high
    raise MapSearchError(
        f"no map passed verification in {max_retries} draws "
        f"(n={n}, d={d}, k={k}, epsilon={epsilon})",
        best_ratio_low=best_low, best_ratio_high=best_high)
