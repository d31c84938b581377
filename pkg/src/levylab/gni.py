"""Tiny dense networks with Gaussian noise injections, the implicit-effect
gradient noise they induce, and its tail/skew statistics.

Networks follow the recursion h_i = activation(W_i h_{i-1}) with no biases;
noise is injected on every layer's activations except the output:
additive draws centered at 0, multiplicative at 1.  Gradients are always
full-batch here so the only stochasticity is the injected noise itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import stable
from .errors import DataError, DegenerateDataError, NumericalError, ParameterError

__all__ = [
    "NetworkSpec",
    "NoiseSpec",
    "GradientNoiseSample",
    "MomentProfile",
    "init_weights",
    "forward_noised",
    "loss_and_grad",
    "implicit_gradient_noise",
    "moment_profile",
    "skew_kurtosis",
    "sinusoid_dataset",
    "train_marginalized",
    "substitute_noise_training",
    "GaussianNoiseModel",
]

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(float)),
    "elu": (
        lambda z: np.where(z > 0, z, np.expm1(np.minimum(z, 0.0))),
        lambda z: np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0))),
    ),
    "linear": (lambda z: z, lambda z: np.ones_like(z)),
}


@dataclass(frozen=True)
class NetworkSpec:
    """Widths n_0..n_L, hidden activation, and loss of a dense network.

    The activation applies to every hidden layer and never to the output.
    """

    widths: tuple
    activation: str = "relu"
    loss: str = "mse"
    init_scheme: str = "fanin_uniform"

    def __post_init__(self):
        if len(self.widths) < 3:
            raise ParameterError("need at least 2 weight layers (widths n0..nL, L >= 2)")
        if any(int(w) < 1 for w in self.widths):
            raise ParameterError(f"widths must be >= 1, got {self.widths}")
        if self.activation not in _ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")
        if self.loss not in ("mse", "cross_entropy"):
            raise ParameterError(f"unknown loss {self.loss!r}")
        if self.init_scheme != "fanin_uniform":
            raise ParameterError(f"unknown init scheme {self.init_scheme!r}")

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1


@dataclass(frozen=True)
class NoiseSpec:
    """Injection mode and per-layer variances for layers 0..L-1.

    Additive draws are N(0, sigma2_i); multiplicative draws are N(1, sigma2_i).
    """

    mode: str
    sigma2: tuple

    def __post_init__(self):
        if self.mode not in ("additive", "multiplicative"):
            raise ParameterError(f"mode must be additive|multiplicative, got {self.mode!r}")
        if any(s < 0 for s in self.sigma2):
            raise ParameterError("variances must be nonnegative")

    @classmethod
    def uniform(cls, spec: NetworkSpec, mode: str, sigma2: float) -> "NoiseSpec":
        return cls(mode=mode, sigma2=(float(sigma2),) * spec.n_layers)

    def check_for(self, spec: NetworkSpec):
        if len(self.sigma2) != spec.n_layers:
            raise ParameterError(
                f"need one variance per non-output layer "
                f"({spec.n_layers}), got {len(self.sigma2)}"
            )


def init_weights(spec: NetworkSpec, rng: stable.RngStream) -> list:
    """Symmetric uniform init scaled by fan-in: W ~ U(+/- 1/sqrt(n_in))."""
    gen = rng.generator()
    ws = []
    for n_in, n_out in zip(spec.widths[:-1], spec.widths[1:]):
        bound = 1.0 / math.sqrt(n_in)
        ws.append(gen.uniform(-bound, bound, size=(int(n_in), int(n_out))))
    return ws


def draw_noise(spec: NetworkSpec, noise: NoiseSpec, batch: int,
               gen: np.random.Generator) -> list:
    """One injection realization: per-example draws for layers 0..L-1."""
    noise.check_for(spec)
    center = 0.0 if noise.mode == "additive" else 1.0
    return [
        center + math.sqrt(s2) * gen.standard_normal((batch, int(n)))
        for s2, n in zip(noise.sigma2, spec.widths[:-1])
    ]


def _apply_noise(h, eps, mode):
    return h + eps if mode == "additive" else h * eps


def forward_noised(spec: NetworkSpec, noise: NoiseSpec, weights: list, x: np.ndarray,
                   eps: list | None = None, rng: stable.RngStream | None = None):
    """Noised and clean forward passes sharing one weight set.

    Returns (noised activations, clean activations, accumulated noise),
    each a list over layers 0..L with the output last.  The accumulated
    noise is exactly noised minus clean, layer by layer.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != spec.widths[0]:
        raise ParameterError(f"input width {x.shape[1]} != n0 = {spec.widths[0]}")
    if eps is None:
        gen = (rng or stable.RngStream(0)).generator()
        eps = draw_noise(spec, noise, x.shape[0], gen)
    act, _ = _ACTIVATIONS[spec.activation]
    h_tilde = [_apply_noise(x, eps[0], noise.mode)]
    h_clean = [x]
    for i in range(1, spec.n_layers):
        h_hat = act(h_tilde[-1] @ weights[i - 1])
        h_tilde.append(_apply_noise(h_hat, eps[i], noise.mode))
        h_clean.append(act(h_clean[-1] @ weights[i - 1]))
    h_tilde.append(h_tilde[-1] @ weights[-1])
    h_clean.append(h_clean[-1] @ weights[-1])
    accumulated = [ht - hc for ht, hc in zip(h_tilde, h_clean)]
    return h_tilde, h_clean, accumulated


def _loss_and_grad_from_forward(spec, weights, x, y, eps, noise):
    """Forward (optionally noised) + backprop; returns (loss, grads)."""
    act, dact = _ACTIVATIONS[spec.activation]
    mode = noise.mode if noise is not None else "additive"
    h = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    B = h.shape[0]
    hs, zs = [], []
    if eps is not None:
        h = _apply_noise(h, eps[0], mode)
    hs.append(h)
    for i, w in enumerate(weights[:-1]):
        z = hs[-1] @ w
        zs.append(z)
        a = act(z)
        if eps is not None:
            a = _apply_noise(a, eps[i + 1], mode)
        hs.append(a)
    out = hs[-1] @ weights[-1]

    if spec.loss == "mse":
        resid = out - y
        loss = float(np.mean(np.sum(resid**2, axis=1)))
        d_out = 2.0 * resid / B
    else:
        shifted = out - out.max(axis=1, keepdims=True)
        logz = np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
        logp = shifted - logz
        loss = float(-np.mean(np.sum(y * logp, axis=1)))
        d_out = (np.exp(logp) - y) / B
    if not np.isfinite(loss):
        raise NumericalError("loss is not finite")

    grads = [None] * len(weights)
    grads[-1] = hs[-1].T @ d_out
    d_h = d_out @ weights[-1].T
    for i in range(len(weights) - 2, -1, -1):
        if eps is not None and mode == "multiplicative":
            d_h = d_h * eps[i + 1]
        d_z = d_h * dact(zs[i])
        grads[i] = hs[i].T @ d_z
        d_h = d_z @ weights[i].T
    return loss, grads


def loss_and_grad(spec: NetworkSpec, weights: list, x, y,
                  noise: NoiseSpec | None = None, eps: list | None = None,
                  rng: stable.RngStream | None = None):
    """Full-batch loss and per-weight gradient, optionally with one fixed
    injection realization (eps) or a fresh draw from rng."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 0:
        raise DataError("batch must be nonempty")
    if noise is not None and eps is None and rng is not None:
        eps = draw_noise(spec, noise, x.shape[0], rng.generator())
    return _loss_and_grad_from_forward(spec, weights, x, y, eps, noise)


@dataclass(frozen=True)
class GradientNoiseSample:
    """Implicit-effect gradient noise, per weight, for one or more draws.

    layers[i] has shape (n_draws, fan_in, fan_out).  The baseline mean over
    M injection draws is shared across the returned draws.
    """

    layers: list
    M: int
    n_draws: int
    meta: dict = field(default_factory=dict)

    def pooled(self) -> np.ndarray:
        return np.concatenate([l.reshape(self.n_draws, -1) for l in self.layers],
                              axis=1).ravel()

    def pooled_layer(self, i: int) -> np.ndarray:
        return self.layers[i].ravel()


def implicit_gradient_noise(spec: NetworkSpec, weights: list, noise: NoiseSpec,
                            x, y, M: int, rng: stable.RngStream,
                            n_draws: int = 1) -> GradientNoiseSample:
    """Gradient of the implicit effect over the full dataset.

    For each fresh draw eps*, returns grad L~(D; w, eps*) minus the Monte
    Carlo mean of grad L~ over M independent draws (the clean-loss gradient
    cancels in the difference, so only noised passes are evaluated).
    """
    if M < 2:
        raise ParameterError(f"M must be >= 2, got {M}")
    gen = rng.generator()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    baseline = None
    for _ in range(M):
        eps = draw_noise(spec, noise, x.shape[0], gen)
        _, g = _loss_and_grad_from_forward(spec, weights, x, y, eps, noise)
        if baseline is None:
            baseline = [gi.copy() for gi in g]
        else:
            for b, gi in zip(baseline, g):
                b += gi
    baseline = [b / M for b in baseline]
    out = [np.empty((n_draws,) + b.shape) for b in baseline]
    for d in range(n_draws):
        eps = draw_noise(spec, noise, x.shape[0], gen)
        _, g = _loss_and_grad_from_forward(spec, weights, x, y, eps, noise)
        for o, gi, b in zip(out, g, baseline):
            o[d] = gi - b
    return GradientNoiseSample(layers=out, M=M, n_draws=n_draws,
                               meta={"mode": noise.mode, "seed": (rng.seed, rng.stream)})


@dataclass(frozen=True)
class MomentProfile:
    """Empirical norms ||X||_m = E[|X|^m]^(1/m) and the fitted tail slope.

    r_hat is the least-squares slope of log ||X||_m against log m over
    m = 2..m_max; ~0.5 for Gaussian data, larger for heavier tails.
    """

    orders: np.ndarray
    norms: np.ndarray
    r_hat: float
    residual: float


def moment_profile(samples, m_max: int = 8) -> MomentProfile:
    samples = np.abs(np.asarray(samples, dtype=float).ravel())
    if samples.size < 10**4:
        raise DataError(f"moment_profile needs >= 1e4 samples, got {samples.size}")
    if not (2 <= m_max <= 10):
        raise ParameterError(f"m_max must be in [2, 10], got {m_max}")
    orders = np.arange(1, m_max + 1, dtype=float)
    # log-norms computed stably: log ||X||_m = (logsumexp(m log|X|) - log n)/m
    logx = np.log(np.maximum(samples, 1e-300))
    norms = np.empty_like(orders)
    for i, m in enumerate(orders):
        mx = m * logx
        top = mx.max()
        norms[i] = (top + math.log(np.exp(mx - top).sum()) - math.log(samples.size)) / m
    fit_m = orders >= 2
    a, b = np.polyfit(np.log(orders[fit_m]), norms[fit_m], 1)
    pred = a * np.log(orders[fit_m]) + b
    resid = float(np.sqrt(np.mean((norms[fit_m] - pred) ** 2)))
    return MomentProfile(orders=orders, norms=np.exp(norms), r_hat=float(a), residual=resid)


def skew_kurtosis(samples):
    """Standardized third moment and excess kurtosis."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 30:
        raise DataError(f"skew_kurtosis needs >= 30 samples, got {samples.size}")
    c = samples - samples.mean()
    var = np.mean(c**2)
    if var <= 0:
        raise DegenerateDataError("zero variance; skewness undefined")
    skew = float(np.mean(c**3) / var**1.5)
    kurt = float(np.mean(c**4) / var**2 - 3.0)
    return skew, kurt


def sinusoid_dataset(n_points: int, q_list=None, rng: stable.RngStream = stable.RngStream(0)):
    """Regression task y = sum_i sin(2 pi q_i x), x uniform on [-1, 1].

    The per-component phase is fixed at zero.
    """
    if q_list is None:
        q_list = tuple(range(5, 55, 5))
    q = np.asarray(list(q_list), dtype=float)
    if q.size == 0:
        raise ParameterError("q_list must be nonempty")
    gen = rng.generator()
    x = gen.uniform(-1.0, 1.0, size=(n_points, 1))
    y = np.sin(2.0 * math.pi * x * q[None, :]).sum(axis=1, keepdims=True)
    return x, y


_DIVERGENCE_LOSS = 1e6


@dataclass(frozen=True)
class TrainingCurve:
    """Per-step clean full-batch training loss; diverged marks a blown run."""

    losses: np.ndarray
    diverged: bool
    final_weights: list


def train_marginalized(spec: NetworkSpec, noise: NoiseSpec, x, y, M: int,
                       steps: int, lr: float, rng: stable.RngStream) -> TrainingCurve:
    """Plain full-batch gradient descent on the M-sample marginalized loss.

    Each step averages gradients over M fresh injection draws; the recorded
    curve is the clean full-batch loss.
    """
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    gen = rng.generator()
    weights = init_weights(spec, rng.child(1))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    losses = np.empty(steps)
    sigma_zero = all(s == 0 for s in noise.sigma2)
    for k in range(steps):
        grads = None
        for _ in range(M):
            eps = None if sigma_zero else draw_noise(spec, noise, x.shape[0], gen)
            _, g = _loss_and_grad_from_forward(spec, weights, x, y, eps, noise)
            if grads is None:
                grads = g
            else:
                for a, b in zip(grads, g):
                    a += b
        for w, g in zip(weights, grads):
            w -= lr * g / M
        losses[k], _ = _loss_and_grad_from_forward(spec, weights, x, y, None, noise)
        if losses[k] > _DIVERGENCE_LOSS or not np.isfinite(losses[k]):
            return TrainingCurve(losses=losses[: k + 1], diverged=True,
                                 final_weights=weights)
    return TrainingCurve(losses=losses, diverged=False, final_weights=weights)


@dataclass(frozen=True)
class GaussianNoiseModel:
    """Gaussian per-weight gradient-noise model (the light-tailed control)."""

    mu: float
    sigma: float


def substitute_noise_training(spec: NetworkSpec, noise: NoiseSpec, x, y, M_big: int,
                              fitted, steps: int, lr: float,
                              rng: stable.RngStream) -> TrainingCurve:
    """Marginalized training with i.i.d. draws from a fitted gradient-noise
    law added to every weight's gradient at every step.

    fitted is a StableParams, a GaussianNoiseModel, or None (no added noise,
    reducing exactly to train_marginalized).
    """
    if fitted is None:
        return train_marginalized(spec, noise, x, y, M_big, steps, lr, rng)
    gen = rng.generator()
    noise_gen = rng.child(2).generator()
    weights = init_weights(spec, rng.child(1))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    losses = np.empty(steps)
    sigma_zero = all(s == 0 for s in noise.sigma2)
    for k in range(steps):
        grads = None
        for _ in range(M_big):
            eps = None if sigma_zero else draw_noise(spec, noise, x.shape[0], gen)
            _, g = _loss_and_grad_from_forward(spec, weights, x, y, eps, noise)
            if grads is None:
                grads = g
            else:
                for a, b in zip(grads, g):
                    a += b
        for w, g in zip(weights, grads):
            g = g / M_big
            if isinstance(fitted, stable.StableParams):
                extra = stable.sample_with(noise_gen, fitted, g.size).reshape(g.shape)
            elif isinstance(fitted, GaussianNoiseModel):
                extra = fitted.mu + fitted.sigma * noise_gen.standard_normal(g.shape)
            else:
                raise ParameterError(f"unsupported noise model {type(fitted).__name__}")
            w -= lr * (g + extra)
        losses[k], _ = _loss_and_grad_from_forward(spec, weights, x, y, None, noise)
        if losses[k] > _DIVERGENCE_LOSS or not np.isfinite(losses[k]):
            return TrainingCurve(losses=losses[: k + 1], diverged=True,
                                 final_weights=weights)
    return TrainingCurve(losses=losses, diverged=False, final_weights=weights)
