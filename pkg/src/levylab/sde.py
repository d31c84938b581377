"""Euler-Maruyama integration of Levy-driven scalar SDEs.

Two drifts share one integrator: the plain negative gradient and the
fractional-Langevin corrected drift.  The driving noise per step is
epsilon * eta_k^(1/alpha) * dL_k with dL_k i.i.d. unit stable draws, all
generated up front from the trajectory's stream so runs are reproducible
bit for bit.

Heavy-tailed jumps occasionally eject the iterate far outside the wells,
where an explicit Euler step on a superlinear (or, for the corrected drift,
exponentially growing) restoring force overshoots instead of relaxing.  The
integrator therefore caps the magnitude of the drift substep; inside the
wells the cap never binds, far outside it emulates the almost-instantaneous
return of the continuous flow.  Iterates beyond 1e6 still terminate the
trajectory with a blowup flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import stable
from .errors import DataError, ParameterError
from .fracdrift import DriftApproxParams, make_drift
from .potentials import Potential

__all__ = [
    "StepSchedule",
    "Trajectory",
    "euler_maruyama",
    "simulate_afld",
    "weighted_time_average",
    "BLOWUP_BOUND",
    "DEFAULT_DRIFT_CAP",
]

BLOWUP_BOUND = 1e6
DEFAULT_DRIFT_CAP = 2.0


@dataclass(frozen=True)
class StepSchedule:
    """Step-size sequence eta_k = eta0 * k^(-rho), k >= 1.

    kind "constant" fixes rho = 0.  For polynomial decay rho must stay in
    (0, 1] so the partial sums H_N diverge and time averages see an
    unbounded horizon.
    """

    kind: str = "constant"
    eta0: float = 1e-3
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "poly"):
            raise ParameterError(f"kind must be 'constant' or 'poly', got {self.kind!r}")
        if not (self.eta0 > 0):
            raise ParameterError(f"eta0 must be > 0, got {self.eta0}")
        if self.kind == "constant" and self.rho != 0.0:
            raise ParameterError("constant schedule requires rho = 0")
        if self.kind == "poly" and not (0.0 < self.rho <= 1.0):
            raise ParameterError(f"poly decay needs rho in (0, 1], got {self.rho}")

    def etas(self, n_steps: int) -> np.ndarray:
        k = np.arange(1, n_steps + 1, dtype=float)
        if self.kind == "constant":
            return np.full(n_steps, self.eta0)
        return self.eta0 * k ** (-self.rho)


@dataclass(frozen=True)
class Trajectory:
    """Iterates w_0..w_N of one SDE discretisation run.

    noise[k] is the stochastic term added at step k+1, so
    w_{k+1} = w_k + drift-step + noise[k] exactly; kept so noise-scaling
    properties can be checked on recorded runs.  A blown-up run is truncated
    at the first iterate beyond the blowup bound and flagged.
    """

    iterates: np.ndarray
    etas: np.ndarray
    noise: np.ndarray
    seed: stable.RngStream
    drift: str
    params: dict = field(default_factory=dict)
    blowup: bool = False
    blowup_step: int | None = None
    w0: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.iterates) - 1


def _integrate(drift_fn, potential, alpha, theta, epsilon, schedule, n_steps, w0,
               rng, drift_cap, tag, params) -> Trajectory:
    etas = schedule.etas(n_steps)
    d_l = stable.sample(stable.StableParams(alpha=alpha, theta=theta), rng, n_steps)
    noise = epsilon * etas ** (1.0 / alpha) * d_l
    iterates = np.empty(n_steps + 1)
    iterates[0] = w = float(w0)
    blowup = False
    blowup_step = None
    cap = float(drift_cap)
    for k in range(n_steps):
        step = etas[k] * drift_fn(w)
        if step > cap:
            step = cap
        elif step < -cap:
            step = -cap
        w = w + step + noise[k]
        iterates[k + 1] = w
        if not (-BLOWUP_BOUND < w < BLOWUP_BOUND):
            blowup = True
            blowup_step = k + 1
            iterates = iterates[: k + 2]
            etas = etas[: k + 1]
            noise = noise[: k + 1]
            break
    return Trajectory(
        iterates=iterates, etas=etas, noise=noise, seed=rng, drift=tag,
        params=params, blowup=blowup, blowup_step=blowup_step, w0=float(w0),
    )


def euler_maruyama(potential: Potential, alpha: float, theta: float, epsilon: float,
                   schedule: StepSchedule, n_steps: int, w0: float = 0.0,
                   rng: stable.RngStream = stable.RngStream(0),
                   drift_cap: float = DEFAULT_DRIFT_CAP) -> Trajectory:
    """Unmodified dynamics: w_{k+1} = w_k - eta_k f'(w_k) + eps eta_k^(1/a) dL_k.

    The drift substep magnitude is capped at drift_cap (never binding inside
    the wells at the default step sizes).
    """
    if not (1.0 < alpha <= 2.0):
        raise ParameterError(f"alpha must be in (1, 2], got {alpha}")
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    grad = potential.grad

    def drift(w):
        return -grad(w)

    params = {"alpha": alpha, "theta": theta, "epsilon": epsilon}
    return _integrate(drift, potential, alpha, theta, epsilon, schedule, n_steps,
                      w0, rng, drift_cap, "unmodified", params)


def simulate_afld(potential: Potential, alpha: float, theta: float, epsilon: float,
                  approx: DriftApproxParams, schedule: StepSchedule, n_steps: int,
                  w0: float = 0.0, rng: stable.RngStream = stable.RngStream(0),
                  drift_cap: float = DEFAULT_DRIFT_CAP) -> Trajectory:
    """Corrected dynamics with the fractional-Langevin drift in place of -f'.

    With K=0 and h = h0(alpha) the drift is the plain negative gradient and
    the run is bit-identical to euler_maruyama under the same stream.
    """
    if not (1.0 < alpha < 2.0):
        raise ParameterError(f"alpha must be in (1, 2), got {alpha}")
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    if not (epsilon > 0):
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    drift = make_drift(potential, epsilon, alpha, theta, approx)
    params = {
        "alpha": alpha, "theta": theta, "epsilon": epsilon,
        "h": approx.h, "K": approx.K, "p": approx.p, "q": approx.q,
    }
    return _integrate(drift, potential, alpha, theta, epsilon, schedule, n_steps,
                      w0, rng, drift_cap, "afld", params)


def _integrate_batch(drift_fn, alpha, theta, epsilon, schedule, n_steps, w0, rngs,
                     drift_cap, tag, params, store_noise=False):
    etas = schedule.etas(n_steps)
    scale = epsilon * etas ** (1.0 / alpha)
    sp = stable.StableParams(alpha=alpha, theta=theta)
    r = len(rngs)
    noise = np.empty((n_steps, r))
    for j, rng in enumerate(rngs):
        noise[:, j] = scale * stable.sample(sp, rng, n_steps)
    iterates = np.empty((n_steps + 1, r))
    iterates[0] = w = np.full(r, float(w0))
    alive = np.ones(r, dtype=bool)
    blow_step = np.zeros(r, dtype=np.int64)
    cap = float(drift_cap)
    for k in range(n_steps):
        step = np.clip(etas[k] * drift_fn(w), -cap, cap)
        w = np.where(alive, w + step + noise[k], w)
        iterates[k + 1] = w
        bad = alive & ~((-BLOWUP_BOUND < w) & (w < BLOWUP_BOUND))
        if np.any(bad):
            blow_step[bad] = k + 1
            alive &= ~bad
            w = np.where(alive, w, 0.0)  # park blown runs at a harmless value
            if not np.any(alive):
                iterates = iterates[: k + 2]
                noise = noise[: k + 1]
                break
    out = []
    for j, rng in enumerate(rngs):
        if blow_step[j]:
            stop = int(blow_step[j])
            traj = Trajectory(
                iterates=iterates[: stop + 1, j].copy(), etas=etas[:stop],
                noise=noise[:stop, j].copy() if store_noise else np.empty(0),
                seed=rng, drift=tag, params=params, blowup=True,
                blowup_step=stop, w0=float(w0),
            )
        else:
            n_done = iterates.shape[0] - 1
            traj = Trajectory(
                iterates=iterates[:, j].copy(), etas=etas[:n_done],
                noise=noise[:, j].copy() if store_noise else np.empty(0),
                seed=rng, drift=tag, params=params, blowup=False,
                blowup_step=None, w0=float(w0),
            )
        out.append(traj)
    return out


def euler_maruyama_batch(potential, alpha, theta, epsilon, schedule, n_steps,
                         w0, rngs, drift_cap=DEFAULT_DRIFT_CAP):
    """Independent euler_maruyama replications evolved in lockstep.

    Each run draws its noise from its own stream, so results depend only on
    the per-run stream, not on the batch composition.
    """
    grad = potential.grad
    params = {"alpha": alpha, "theta": theta, "epsilon": epsilon}
    return _integrate_batch(lambda w: -grad(w), alpha, theta, epsilon, schedule,
                            n_steps, w0, list(rngs), drift_cap, "unmodified", params)


def simulate_afld_batch(potential, alpha, theta, epsilon, approx, schedule, n_steps,
                        w0, rngs, drift_cap=DEFAULT_DRIFT_CAP):
    """Independent simulate_afld replications evolved in lockstep."""
    drift = make_drift(potential, epsilon, alpha, theta, approx)
    params = {"alpha": alpha, "theta": theta, "epsilon": epsilon,
              "h": approx.h, "K": approx.K, "p": approx.p, "q": approx.q}
    return _integrate_batch(drift, alpha, theta, epsilon, schedule, n_steps, w0,
                            list(rngs), drift_cap, "afld", params)


def weighted_time_average(traj: Trajectory, g, burn_in: int | None = None) -> float:
    """Step-size-weighted average (1/H) sum eta_k g(w_k) past the burn-in.

    burn_in counts steps dropped from the front; None means 10% of the run.
    """
    n = traj.n_steps
    if burn_in is None:
        burn_in = n // 10
    if not (0 <= burn_in < n):
        raise DataError(f"burn_in={burn_in} leaves no steps of the {n}-step run")
    w = traj.iterates[1 + burn_in:]
    etas = traj.etas[burn_in:]
    h = float(etas.sum())
    return float(np.dot(etas, np.asarray(g(w), dtype=float)) / h)
