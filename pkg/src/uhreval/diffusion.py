"""Forward-process kernels, velocity-matching losses, and a toy Euler sampler.

All losses use mean reduction over elements so values stay comparable
across resolutions; gradients returned by the *_grad helpers follow the
same convention. The wavelet-domain loss with uniform sub-band weights is
numerically identical to the plain velocity loss (the transform is
orthonormal); non-uniform weights are the knob that shifts emphasis toward
high-frequency bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pixel import as_tensor
from .wavelet import SubbandSet, dwt, idwt

#: Sub-band weighting that emphasizes high-frequency detail bands.
HF_EMPHASIS_SUBBANDS = (1.0, 2.0, 2.0, 4.0)


@dataclass(frozen=True)
class NoiseSchedule:
    """Discrete variance schedule beta_t in (0, 1) with cached products.

    alpha_t = 1 - beta_t and alpha_bar_t is the running product; alpha_bar
    at t = 0 is defined as 1.
    """

    betas: np.ndarray
    alphas: np.ndarray = field(init=False)
    alpha_bars: np.ndarray = field(init=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size == 0:
            raise ValueError("betas must be a non-empty 1-D sequence")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise ValueError("every beta must lie strictly inside (0, 1)")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", 1.0 - betas)
        object.__setattr__(self, "alpha_bars", np.cumprod(1.0 - betas))

    def __len__(self) -> int:
        return self.betas.size

    def alpha_bar(self, t: int) -> float:
        if t == 0:
            return 1.0
        if not 1 <= t <= len(self):
            raise ValueError(f"t must be in [0, {len(self)}], got {t}")
        return float(self.alpha_bars[t - 1])


@dataclass(frozen=True)
class RfSample:
    """Linear-interpolation state between data x0 and noise eps at time t."""

    x0: np.ndarray
    eps: np.ndarray
    t: float
    xt: np.ndarray
    u: np.ndarray

    @classmethod
    def at_time(cls, x0, eps, t: float) -> "RfSample":
        x0 = as_tensor(x0, "x0")
        eps = as_tensor(eps, "eps")
        if x0.shape != eps.shape:
            raise ValueError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t must be in [0, 1], got {t}")
        return cls(x0=x0, eps=eps, t=float(t), xt=(1.0 - t) * x0 + t * eps, u=eps - x0)

    def __post_init__(self):
        if not (self.x0.shape == self.eps.shape == self.xt.shape == self.u.shape):
            raise ValueError("all sample tensors must share one shape")


@dataclass(frozen=True)
class LossWeights:
    """Time weight w_t plus per-sub-band weights (ll, lh, hl, hh)."""

    w_t: float = 1.0
    subband_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        values = (self.w_t,) + tuple(self.subband_weights)
        if len(self.subband_weights) != 4:
            raise ValueError("subband_weights must have exactly 4 entries")
        if any((not math.isfinite(v)) or v < 0.0 for v in values):
            raise ValueError("weights must be finite and non-negative")


def forward_step(x_prev, eps, beta_t: float) -> np.ndarray:
    """One reparameterized forward step: sqrt(1 - beta) x + sqrt(beta) eps."""
    x_prev = as_tensor(x_prev, "x_prev")
    eps = as_tensor(eps, "eps")
    if x_prev.shape != eps.shape:
        raise ValueError(f"x_prev shape {x_prev.shape} != eps shape {eps.shape}")
    if not 0.0 < beta_t < 1.0:
        raise ValueError(f"beta_t must lie in (0, 1), got {beta_t}")
    return math.sqrt(1.0 - beta_t) * x_prev + math.sqrt(beta_t) * eps


def forward_marginal(x0, eps, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Closed-form noising to step t: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    x0 = as_tensor(x0, "x0")
    eps = as_tensor(eps, "eps")
    if x0.shape != eps.shape:
        raise ValueError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    abar = sched.alpha_bar(t)
    return math.sqrt(abar) * x0 + math.sqrt(1.0 - abar) * eps


def noise_pred_loss(eps_hat, eps) -> float:
    """Mean squared error between predicted and true noise."""
    eps_hat = as_tensor(eps_hat, "eps_hat")
    eps = as_tensor(eps, "eps")
    if eps_hat.shape != eps.shape:
        raise ValueError(f"shape mismatch: {eps_hat.shape} vs {eps.shape}")
    diff = eps - eps_hat
    return float(np.mean(diff * diff))


def velocity_mse(v_hat, u, w_t: float = 1.0) -> float:
    """w_t-weighted mean squared error against a target velocity field."""
    v_hat = as_tensor(v_hat, "v_hat")
    u = as_tensor(u, "u")
    if v_hat.shape != u.shape:
        raise ValueError(f"shape mismatch: {v_hat.shape} vs {u.shape}")
    diff = u - v_hat
    return float(w_t * np.mean(diff * diff))


def rf_loss(v_hat, sample: RfSample, w: LossWeights = LossWeights()) -> float:
    """Velocity-matching loss w_t * mean((u - v_hat)^2)."""
    return velocity_mse(v_hat, sample.u, w.w_t)


def rf_loss_grad(v_hat, sample: RfSample, w: LossWeights = LossWeights()) -> np.ndarray:
    """Gradient of rf_loss with respect to v_hat."""
    v_hat = as_tensor(v_hat, "v_hat")
    if v_hat.shape != sample.u.shape:
        raise ValueError(f"shape mismatch: {v_hat.shape} vs {sample.u.shape}")
    return (2.0 * w.w_t / v_hat.size) * (v_hat - sample.u)


def wavelet_velocity_mse(
    v_hat, u, w_t: float = 1.0, subband_weights=(1.0, 1.0, 1.0, 1.0)
) -> float:
    """Velocity MSE computed band-wise in the Haar wavelet domain.

    Each band's squared error is divided by the total element count, so
    uniform sub-band weights reproduce the plain velocity MSE exactly.
    """
    v_hat = as_tensor(v_hat, "v_hat")
    u = as_tensor(u, "u")
    if v_hat.shape != u.shape:
        raise ValueError(f"shape mismatch: {v_hat.shape} vs {u.shape}")
    du = dwt(u)
    dv = dwt(v_hat)
    total = 0.0
    for weight, band_u, band_v in zip(subband_weights, (du.ll, du.lh, du.hl, du.hh), (dv.ll, dv.lh, dv.hl, dv.hh)):
        diff = band_u - band_v
        total += weight * float(np.sum(diff * diff))
    return w_t * total / u.size


def wlf_loss(v_hat, sample: RfSample, w: LossWeights = LossWeights()) -> float:
    """Wavelet-domain velocity-matching loss (requires even spatial dims)."""
    return wavelet_velocity_mse(v_hat, sample.u, w.w_t, w.subband_weights)


def wlf_loss_grad(v_hat, sample: RfSample, w: LossWeights = LossWeights()) -> np.ndarray:
    """Gradient of wlf_loss with respect to v_hat (adjoint of the transform)."""
    v_hat = as_tensor(v_hat, "v_hat")
    if v_hat.shape != sample.u.shape:
        raise ValueError(f"shape mismatch: {v_hat.shape} vs {sample.u.shape}")
    du = dwt(sample.u)
    dv = dwt(v_hat)
    wll, wlh, whl, whh = w.subband_weights
    weighted = SubbandSet(
        ll=wll * (dv.ll - du.ll),
        lh=wlh * (dv.lh - du.lh),
        hl=whl * (dv.hl - du.hl),
        hh=whh * (dv.hh - du.hh),
    )
    return (2.0 * w.w_t / v_hat.size) * idwt(weighted)


def euler_sample(velocity_field, x_init, steps: int) -> np.ndarray:
    """Integrate dx/dt = v from t = 1 (noise) down to t = 0 with uniform steps.

    `velocity_field(x, t)` must return a tensor of x's shape. Raises on
    non-finite intermediate states.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    x = as_tensor(x_init, "x_init").copy()
    for k in range(steps):
        t = 1.0 - k / steps
        v = np.asarray(velocity_field(x, t), dtype=np.float64)
        if v.shape != x.shape:
            raise ValueError(f"velocity shape {v.shape} != state shape {x.shape}")
        x = x - v / steps
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite state after step {k + 1} of {steps}")
    return x
