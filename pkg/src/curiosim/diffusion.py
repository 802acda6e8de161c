"""Bass-style diffusion of information arrival.

Closed-form adoption analytics, a binomial-thinning arrival sampler, and
least-squares parameter recovery.  The hazard of a not-yet-consumed item
being picked up at installed fraction F is ``p + q*F``; integrating the
resulting ODE with F(0)=0 gives the closed forms used here.  Time is an
abstract "period"; every rate is per period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


@dataclass(frozen=True)
class BassParams:
    """Innovation/imitation/market-potential triple driving arrivals.

    p: coefficient of innovation (1/time, > 0).
    q: coefficient of imitation (1/time, >= 0).
    m: ultimate market potential (count, > 0).
    """

    p: float
    q: float
    m: float

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise ValueError(f"coefficient of innovation must be > 0, got p={self.p}")
        if self.q < 0:
            raise ValueError(f"coefficient of imitation must be >= 0, got q={self.q}")
        if not self.m > 0:
            raise ValueError(f"market potential must be > 0, got m={self.m}")


@dataclass
class AdoptionSeries:
    """Arrivals per step at a fixed time step ``dt``."""

    dt: float
    counts: np.ndarray
    clamped_steps: int = 0  # steps where hazard*dt exceeded 1 and was clamped

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def times(self) -> np.ndarray:
        """Left edge of each step."""
        return np.arange(len(self.counts)) * self.dt

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(len(self.counts)) + 0.5) * self.dt

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.counts)


def installed_fraction(params: BassParams, t: float) -> float:
    """Cumulative fraction F(t) of the potential adopted by time t.

    F(t) = (1 - exp(-(p+q)t)) / (1 + (q/p) exp(-(p+q)t)), the solution of
    the hazard ODE with F(0)=0.  Computed as p(1-E)/(p+qE) so F(0) is an
    exact 0 and the large-t limit an exact 1.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    e = math.exp(-(params.p + params.q) * t)
    return params.p * (1.0 - e) / (params.p + params.q * e)


def sales_rate(params: BassParams, t: float) -> float:
    """Arrival rate S(t) = m * f(t), f the density of the installed fraction.

    Equivalent to m (p+q)^2/p * E / (1 + (q/p)E)^2 with E = exp(-(p+q)t),
    rearranged as m*p*E*((p+q)/(p+qE))^2 so that S(0) is exactly m*p.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    e = math.exp(-(params.p + params.q) * t)
    ratio = (params.p + params.q) / (params.p + params.q * e)
    return params.m * params.p * e * ratio * ratio


def hazard(params: BassParams, installed: float) -> float:
    """Per-unit adoption rate p + q*F at installed fraction F."""
    if not 0.0 <= installed <= 1.0:
        raise ValueError(f"installed fraction must be in [0, 1], got {installed}")
    return params.p + params.q * installed


def peak_time(params: BassParams) -> float:
    """Time at which S(t) is maximal: ln(q/p)/(p+q), or 0 when q <= p."""
    if params.q <= params.p:
        return 0.0
    return math.log(params.q / params.p) / (params.p + params.q)


def step_arrivals(
    params: BassParams,
    adopted: int,
    dt: float,
    rng: np.random.Generator,
) -> tuple[int, bool]:
    """One binomial-thinning step over the remaining potential.

    Draws arrivals ~ Binomial(m - adopted, hazard(adopted/m) * dt); the
    probability is clamped to 1 when hazard * dt exceeds it (the second
    return value reports the clamp).  ``m`` must be a whole number.
    """
    m = int(params.m)
    if m != params.m or m < 1:
        raise ValueError(f"market potential must be an integer >= 1 to sample, got {params.m}")
    if not 0 <= adopted <= m:
        raise ValueError(f"adopted count must be in [0, {m}], got {adopted}")
    remaining = m - adopted
    if remaining == 0:
        return 0, False
    prob = hazard(params, adopted / m) * dt
    clamped = prob > 1.0
    if clamped:
        prob = 1.0
    return int(rng.binomial(remaining, prob)), clamped


def sample_arrivals(
    params: BassParams,
    dt: float,
    horizon: float,
    rng: np.random.Generator,
) -> AdoptionSeries:
    """Draw a stochastic arrival series over [0, horizon].

    Each step thins the remaining potential binomially with success
    probability hazard(adopted/m)*dt, so the cumulative count can never
    exceed m.  ``m`` must be a whole number.  Steps where hazard*dt > 1
    are clamped to probability 1 and counted in ``clamped_steps``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")

    n_steps = int(math.ceil(horizon / dt - 1e-12))
    counts = np.zeros(n_steps, dtype=float)
    adopted = 0
    clamped_steps = 0
    for i in range(n_steps):
        if adopted == params.m:
            break
        draws, clamped = step_arrivals(params, adopted, dt, rng)
        counts[i] = draws
        adopted += draws
        clamped_steps += int(clamped)
    return AdoptionSeries(dt=dt, counts=counts, clamped_steps=clamped_steps)


@dataclass
class FitResult:
    """Recovered parameters with the final residual report."""

    params: BassParams
    residual_norm: float  # sqrt of the sum of squared rate residuals
    n_evaluations: int
    converged: bool = True


class FitConvergenceError(RuntimeError):
    """Raised when the least-squares fit cannot converge.

    Carries the best parameters seen so far (``params``, possibly None for
    degenerate input) and the corresponding ``residual_norm``.
    """

    def __init__(self, message: str, params: BassParams | None = None,
                 residual_norm: float = math.inf):
        super().__init__(message)
        self.params = params
        self.residual_norm = residual_norm


def _initial_guess(series: AdoptionSeries) -> BassParams:
    counts = series.counts
    total = float(counts.sum())
    m0 = max(total * 1.25, 1.0)
    first = next((c for c in counts if c > 0), counts[0])
    p0 = min(max(first / series.dt / m0, 1e-4), 0.5)
    q0 = 0.3
    return BassParams(p=p0, q=q0, m=m0)


def fit(series: AdoptionSeries, initial_guess: BassParams | None = None,
        max_iterations: int = 200) -> FitResult:
    """Recover BassParams from an adoption series by nonlinear least squares.

    Minimizes the squared residuals between the observed per-step rates
    counts/dt and sales_rate evaluated at step midpoints.  Parameters are
    optimized in log space so p, q, m stay positive (q may approach zero
    but never go negative).  Levenberg-Marquardt, i.e. damped Gauss-Newton.
    """
    counts = series.counts
    if int(np.count_nonzero(counts)) < 6:
        raise FitConvergenceError(
            f"series carries too little information to fit: "
            f"{int(np.count_nonzero(counts))} non-zero steps (need >= 6)")

    mids = series.midpoints
    rates = counts / series.dt
    guess = initial_guess if initial_guess is not None else _initial_guess(series)
    # Floor the q guess away from log(0); the optimizer can still drive q down.
    theta0 = np.log([guess.p, max(guess.q, 1e-6), guess.m])

    def residuals(theta: np.ndarray) -> np.ndarray:
        p, q, m = np.exp(theta)
        e = np.exp(-(p + q) * mids)
        ratio = (p + q) / (p + q * e)
        return m * p * e * ratio * ratio - rates

    result = least_squares(residuals, theta0, method="lm",
                           max_nfev=max_iterations * len(theta0),
                           xtol=1e-14, ftol=1e-14, gtol=1e-14)
    p, q, m = np.exp(result.x)
    residual_norm = float(np.linalg.norm(result.fun))
    fitted = BassParams(p=float(p), q=float(q), m=float(m))
    if result.status <= 0:
        raise FitConvergenceError(
            f"fit did not converge after {result.nfev} evaluations "
            f"(residual norm {residual_norm:.6g})",
            params=fitted, residual_norm=residual_norm)
    return FitResult(params=fitted, residual_norm=residual_norm,
                     n_evaluations=int(result.nfev))
