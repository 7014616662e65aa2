"""Loss kernels for scale-consistent autoencoder training.

Covers the feature-map distillation term, the Gaussian KL term, the
patch-based adversarial pair, the gradient-ratio adaptive weight, and the
affine combinator that assembles them. The perceptual distance is a
pluggable callable (tensor x tensor -> float); `mean_squared_perceptual`
is the stand-in used when no pretrained network is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pixel import as_tensor

UPSAMPLE_MODES = ("nearest", "bilinear")

# Probability clamp for the adversarial log terms.
_PROB_EPS = 1e-7

# Stabilizer and cap for the gradient-ratio weight.
_RATIO_EPS = 1e-6
_RATIO_CAP = 1e4


def _linear_axis(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source indices and fractions for 2x bilinear upsampling, half-pixel centers."""
    src = np.clip((np.arange(2 * n, dtype=np.float64) + 0.5) / 2.0 - 0.5, 0.0, n - 1.0)
    lo = np.floor(src).astype(np.int64)
    frac = src - lo
    hi = np.minimum(lo + 1, n - 1)
    return lo, hi, frac


def upsample2x(x, mode: str = "nearest") -> np.ndarray:
    """Double the spatial dims of a (C, H, W) tensor.

    `nearest` replicates each element into a 2x2 block; `bilinear`
    interpolates with half-pixel (align-corners-false) sampling and edge
    clamping.
    """
    x = as_tensor(x, "input")
    if mode == "nearest":
        return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)
    if mode != "bilinear":
        raise ValueError(f"mode must be one of {UPSAMPLE_MODES}, got {mode!r}")
    lo_h, hi_h, frac_h = _linear_axis(x.shape[1])
    rows = x[:, lo_h, :] * (1.0 - frac_h)[None, :, None] + x[:, hi_h, :] * frac_h[None, :, None]
    lo_w, hi_w, frac_w = _linear_axis(x.shape[2])
    return rows[:, :, lo_w] * (1.0 - frac_w)[None, None, :] + rows[:, :, hi_w] * frac_w[None, None, :]


def sc_loss(teacher, student, mode: str = "nearest") -> float:
    """Distillation term: MSE between teacher features and 2x-upsampled student features."""
    teacher = as_tensor(teacher, "teacher")
    student = as_tensor(student, "student")
    expected = (student.shape[0], 2 * student.shape[1], 2 * student.shape[2])
    if teacher.shape != expected:
        raise ValueError(
            f"teacher shape {teacher.shape} must be student shape {student.shape} doubled spatially"
        )
    diff = teacher - upsample2x(student, mode)
    return float(np.mean(diff * diff))


def kl_loss(mu, logvar) -> float:
    """Per-element KL divergence to the standard normal, mean reduced.

    0.5 * (mu^2 + sigma^2 - 1 - log sigma^2); zero exactly when mu = 0 and
    logvar = 0 everywhere.
    """
    mu = as_tensor(mu, "mu")
    logvar = as_tensor(logvar, "logvar")
    if mu.shape != logvar.shape:
        raise ValueError(f"mu shape {mu.shape} != logvar shape {logvar.shape}")
    # expm1 keeps sigma^2 - 1 - logvar non-negative for tiny logvar.
    return float(np.mean(0.5 * (mu * mu + np.expm1(logvar) - logvar)))


def adv_discriminator_loss(d_real, d_fake) -> float:
    """mean(log D(real)) + mean(log(1 - D(fake))) -- the quantity D maximizes.

    Inputs are probabilities, clamped away from {0, 1} for stability.
    """
    d_real = np.clip(np.asarray(d_real, dtype=np.float64), _PROB_EPS, 1.0 - _PROB_EPS)
    d_fake = np.clip(np.asarray(d_fake, dtype=np.float64), _PROB_EPS, 1.0 - _PROB_EPS)
    return float(np.mean(np.log(d_real)) + np.mean(np.log(1.0 - d_fake)))


def adv_generator_loss(d_fake) -> float:
    """mean(log(1 - D(fake))) -- minimized by the generator (saturating form)."""
    d_fake = np.clip(np.asarray(d_fake, dtype=np.float64), _PROB_EPS, 1.0 - _PROB_EPS)
    return float(np.mean(np.log(1.0 - d_fake)))


def adaptive_weight(grad_perceptual_norm: float, grad_adv_norm: float) -> float:
    """Gradient-norm ratio balancing the perceptual and adversarial terms.

    The denominator is stabilized with 1e-6 and the result capped at 1e4;
    both constants are echoed in reports so runs stay comparable.
    """
    if grad_perceptual_norm < 0 or grad_adv_norm < 0:
        raise ValueError("gradient norms must be non-negative")
    if not (math.isfinite(grad_perceptual_norm) and math.isfinite(grad_adv_norm)):
        raise ValueError("gradient norms must be finite")
    return min(grad_perceptual_norm / (grad_adv_norm + _RATIO_EPS), _RATIO_CAP)


def mean_squared_perceptual(a, b) -> float:
    """Reference stand-in for a pluggable perceptual distance."""
    a = as_tensor(a, "a")
    b = as_tensor(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.mean(diff * diff))


@dataclass(frozen=True)
class VaeLossWeights:
    """Term weights; lambda_kl stays None for the decoder-only objective."""

    lambda_sc: float = 1.0
    lambda_kl: float | None = None
    lambda_lpips: float = 0.1
    lambda_adv: float = 0.05

    def __post_init__(self):
        named = {"lambda_sc": self.lambda_sc, "lambda_lpips": self.lambda_lpips, "lambda_adv": self.lambda_adv}
        if self.lambda_kl is not None:
            named["lambda_kl"] = self.lambda_kl
        for name, value in named.items():
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")


def vae_total_loss(
    rec: float,
    sc: float,
    lpips: float,
    adv_gen: float,
    *,
    weights: VaeLossWeights = VaeLossWeights(),
    adaptive: float = 1.0,
    kl: float | None = None,
) -> float:
    """Affine combination of the training terms.

    rec + lambda_sc*sc + lambda_kl*kl + lambda_lpips*lpips
        + lambda_adv*adaptive*adv_gen,
    with the KL term omitted when `kl` is None (decoder-only fine-tuning).
    """
    parts = {"rec": rec, "sc": sc, "lpips": lpips, "adv_gen": adv_gen, "adaptive": adaptive}
    if kl is not None:
        parts["kl"] = kl
    for name, value in parts.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value}")
    total = rec + weights.lambda_sc * sc + weights.lambda_lpips * lpips
    total += weights.lambda_adv * adaptive * adv_gen
    if kl is not None:
        if weights.lambda_kl is None:
            raise ValueError("a kl part was given but weights.lambda_kl is unset")
        total += weights.lambda_kl * kl
    return float(total)
