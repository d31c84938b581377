"""First-exit-time experiments and the analytic well-hopping formulas.

The analytic side: single-well exit rates with left/right tail weights
(1 -/+ theta)/2, the inter-well transition generator, and the double-well
stationary occupancy.  The Monte Carlo side: Euler simulation of exits with
a margin-shrunk well, plus the exponential-law goodness-of-fit check on
rate * exit-time products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

from . import stable
from .errors import DataError, ParameterError
from .potentials import Potential

__all__ = [
    "WellSpec",
    "ExitRecord",
    "ExitLawResult",
    "exit_rate_analytic",
    "simulate_exit",
    "simulate_exit_batch",
    "exit_law_test",
    "transition_matrix",
    "double_well_occupancy",
]


@dataclass(frozen=True)
class WellSpec:
    """One well: boundaries s_prev < m < s_next with an inner exit margin.

    Boundaries may be infinite (outermost wells).  The exit region is the
    complement of [s_prev + delta_exit, s_next - delta_exit].
    """

    s_prev: float
    m: float
    s_next: float
    delta_exit: float = 0.1

    def __post_init__(self):
        if not (self.delta_exit > 0):
            raise ParameterError(f"delta_exit must be > 0, got {self.delta_exit}")
        if not (self.s_prev + self.delta_exit < self.m < self.s_next - self.delta_exit):
            raise ParameterError(
                f"need s_prev + delta < m < s_next - delta, got "
                f"({self.s_prev}, {self.m}, {self.s_next}) with delta={self.delta_exit}"
            )

    @property
    def lo(self) -> float:
        return self.s_prev + self.delta_exit

    @property
    def hi(self) -> float:
        return self.s_next - self.delta_exit


@dataclass(frozen=True)
class ExitRecord:
    """Outcome of one exit simulation; censored means no exit by max_steps."""

    exit_time: float
    side: str  # "left" | "right" | "none"
    censored: bool
    seed: stable.RngStream | None = None
    n_steps: int = 0


@dataclass(frozen=True)
class ExitLawResult:
    ks_stat: float
    p_value: float
    passed_1pct: bool
    mean_scaled: float
    n_uncensored: int
    n_censored: int


def _rate_weights(alpha: float, theta: float, epsilon: float):
    if not (1.0 < alpha < 2.0):
        raise ParameterError(f"alpha must be in (1, 2), got {alpha}")
    if not (-1.0 < theta < 1.0):
        raise ParameterError(f"theta must be in (-1, 1), got {theta}")
    if not (epsilon > 0):
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    return abs(stable.tail_constant(alpha))


def exit_rate_analytic(well: WellSpec, epsilon: float, alpha: float, theta: float) -> float:
    """Asymptotic exit rate: weighted power-law tails over the two barriers.

    lambda = (1-theta)/2 C_a |(s_prev-m)/eps|^-a + (1+theta)/2 C_a |(s_next-m)/eps|^-a,
    with an infinite boundary contributing zero.
    """
    c = _rate_weights(alpha, theta, epsilon)
    left = 0.0 if math.isinf(well.s_prev) else \
        (1.0 - theta) / 2.0 * c * (abs(well.s_prev - well.m) / epsilon) ** (-alpha)
    right = 0.0 if math.isinf(well.s_next) else \
        (1.0 + theta) / 2.0 * c * (abs(well.s_next - well.m) / epsilon) ** (-alpha)
    rate = left + right
    if rate <= 0:
        raise ParameterError("well has no finite boundary; exit rate undefined")
    return rate


def exit_side_split(well: WellSpec, epsilon: float, alpha: float, theta: float) -> float:
    """Analytic probability that the first exit is to the right."""
    c = _rate_weights(alpha, theta, epsilon)
    left = 0.0 if math.isinf(well.s_prev) else \
        (1.0 - theta) / 2.0 * c * (abs(well.s_prev - well.m) / epsilon) ** (-alpha)
    right = 0.0 if math.isinf(well.s_next) else \
        (1.0 + theta) / 2.0 * c * (abs(well.s_next - well.m) / epsilon) ** (-alpha)
    return right / (left + right)


def simulate_exit(potential: Potential, well: WellSpec, epsilon: float, alpha: float,
                  theta: float, dt: float = 0.005, max_steps: int = 10_000_000,
                  rng: stable.RngStream = stable.RngStream(0),
                  drift_cap: float = 2.0) -> ExitRecord:
    """First exit of the Euler chain started at the well minimum.

    Exit is decided on the post-step position (a jump may overshoot the
    boundary within one step; where it lands decides the side).
    """
    if not (0 < dt <= 0.01):
        raise ParameterError(f"dt must be in (0, 0.01], got {dt}")
    if max_steps > 10**8:
        raise ParameterError("max_steps capped at 1e8")
    gen = rng.generator()
    params = stable.StableParams(alpha=alpha, theta=theta)
    scale = epsilon * dt ** (1.0 / alpha)
    grad = potential.grad
    lo, hi = well.lo, well.hi
    w = float(well.m)
    k = 0
    chunk = 4096
    while k < max_steps:
        n = min(chunk, max_steps - k)
        noise = scale * stable.sample_with(gen, params, n)
        for i in range(n):
            step = -dt * grad(w)
            if step > drift_cap:
                step = drift_cap
            elif step < -drift_cap:
                step = -drift_cap
            w = w + step + noise[i]
            k += 1
            if not (lo <= w <= hi):
                side = "right" if w > hi else "left"
                return ExitRecord(exit_time=k * dt, side=side, censored=False,
                                  seed=rng, n_steps=k)
    return ExitRecord(exit_time=max_steps * dt, side="none", censored=True,
                      seed=rng, n_steps=max_steps)


def simulate_exit_batch(potential: Potential, well: WellSpec, epsilon: float,
                        alpha: float, theta: float, n_runs: int, dt: float = 0.005,
                        max_steps: int = 10_000_000,
                        rng: stable.RngStream = stable.RngStream(0),
                        drift_cap: float = 2.0) -> list[ExitRecord]:
    """Vectorized batch of independent exit runs sharing one stream.

    Equivalent in law to n_runs independent simulate_exit calls, evolved in
    lockstep for speed; a run's identity is (stream, column index).
    """
    if not (0 < dt <= 0.01):
        raise ParameterError(f"dt must be in (0, 0.01], got {dt}")
    gen = rng.generator()
    params = stable.StableParams(alpha=alpha, theta=theta)
    scale = epsilon * dt ** (1.0 / alpha)
    grad = potential.grad
    lo, hi = well.lo, well.hi
    w = np.full(n_runs, float(well.m))
    active = np.arange(n_runs)
    exit_step = np.zeros(n_runs, dtype=np.int64)
    side = np.array(["none"] * n_runs, dtype=object)
    k = 0
    chunk = 256
    while active.size and k < max_steps:
        n = min(chunk, max_steps - k)
        noise = scale * stable.sample_with(gen, params, n * active.size).reshape(n, active.size)
        for i in range(n):
            step = np.clip(-dt * grad(w[active]), -drift_cap, drift_cap)
            w[active] = w[active] + step + noise[i]
            k += 1
            out = (w[active] < lo) | (w[active] > hi)
            if np.any(out):
                hit = active[out]
                exit_step[hit] = k
                side[hit] = np.where(w[hit] > hi, "right", "left")
                keep = ~out
                active = active[keep]
                noise = noise[:, keep]
                if not active.size:
                    break
    records = []
    for j in range(n_runs):
        if exit_step[j] > 0:
            records.append(ExitRecord(exit_time=float(exit_step[j] * dt), side=str(side[j]),
                                      censored=False, seed=rng, n_steps=int(exit_step[j])))
        else:
            records.append(ExitRecord(exit_time=float(max_steps * dt), side="none",
                                      censored=True, seed=rng, n_steps=max_steps))
    return records


def exit_law_test(records, rate: float, min_records: int = 500) -> ExitLawResult:
    """Kolmogorov-Smirnov check of rate * exit_time against Exp(1).

    Censored records are excluded (their count is reported); fewer than
    min_records uncensored exits is an error.
    """
    if rate <= 0:
        raise ParameterError(f"rate must be > 0, got {rate}")
    if records and isinstance(records[0], ExitRecord):
        vals = np.array([r.exit_time for r in records if not r.censored])
        n_cens = sum(1 for r in records if r.censored)
    else:
        vals = np.asarray(records, dtype=float)
        n_cens = 0
    if vals.size < min_records:
        raise DataError(f"need >= {min_records} uncensored exits, got {vals.size}")
    scaled = rate * vals
    ks = _st.kstest(scaled, "expon")
    return ExitLawResult(
        ks_stat=float(ks.statistic),
        p_value=float(ks.pvalue),
        passed_1pct=bool(ks.pvalue >= 0.01),
        mean_scaled=float(scaled.mean()),
        n_uncensored=int(vals.size),
        n_censored=int(n_cens),
    )


def transition_matrix(minima, saddles, alpha: float, theta: float):
    """Generator matrix of the well-hopping limit chain.

    Off-diagonal q_ij carries the directional weight (1 -/+ theta)/2 times
    the difference of boundary tail weights of the destination well seen
    from m_i; rows sum to zero.  Outermost boundaries are at +/- infinity
    and contribute nothing.
    """
    minima = [float(m) for m in minima]
    saddles = [float(s) for s in saddles]
    n = len(minima)
    if len(saddles) != n - 1:
        raise ParameterError(f"need exactly n-1 saddles for n minima, got {len(saddles)}")
    pts = []
    for i, m in enumerate(minima):
        pts.append(m)
        if i < n - 1:
            pts.append(saddles[i])
    if pts != sorted(pts) or len(set(pts)) != len(pts):
        raise ParameterError("minima and saddles must strictly interlace")
    if not (1.0 < alpha < 2.0):
        raise ParameterError(f"alpha must be in (1, 2), got {alpha}")
    if not (-1.0 < theta < 1.0):
        raise ParameterError(f"theta must be in (-1, 1), got {theta}")
    s = [-math.inf] + saddles + [math.inf]

    def tail_weight(x, m):
        return 0.0 if math.isinf(x) else abs(x - m) ** (-alpha)

    q = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w_dir = (1.0 - theta) / 2.0 if j < i else (1.0 + theta) / 2.0
            q[i, j] = w_dir * abs(tail_weight(s[j], minima[i]) - tail_weight(s[j + 1], minima[i]))
        q[i, i] = -q[i].sum()
    rates = -np.diag(q)
    return q, rates


def double_well_occupancy(m1: float, m2: float, alpha: float, theta: float):
    """Stationary occupancy (pi1, pi2) of the two-well limit chain.

    pi2/pi1 = (1+theta)/(1-theta) * (m2/|m1|)^alpha for wells at m1 < 0 < m2.
    """
    if not (m1 < 0 < m2):
        raise ParameterError(f"need m1 < 0 < m2, got {m1}, {m2}")
    if not (1.0 < alpha < 2.0):
        raise ParameterError(f"alpha must be in (1, 2), got {alpha}")
    if not (-1.0 < theta < 1.0):
        raise ParameterError(f"theta must be in (-1, 1), got {theta}")
    ratio = (1.0 + theta) / (1.0 - theta) * (m2 / abs(m1)) ** alpha
    pi1 = 1.0 / (1.0 + ratio)
    return pi1, 1.0 - pi1
