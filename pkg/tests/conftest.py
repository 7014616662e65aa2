"""Shared fixture generators: synthetic photographic images and blurring."""

from __future__ import annotations

import numpy as np
import pytest


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflect padding; returns uint8."""
    radius = max(1, int(3.0 * sigma + 0.5))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (xs / sigma) ** 2)
    kernel /= kernel.sum()
    arr = img.astype(np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    for axis in (0, 1):
        pad = [(radius, radius) if a == axis else (0, 0) for a in range(3)]
        padded = np.pad(arr, pad, mode="reflect")
        acc = np.zeros_like(arr)
        for i, kv in enumerate(kernel):
            sl = [slice(None)] * 3
            sl[axis] = slice(i, i + arr.shape[axis])
            acc += kv * padded[tuple(sl)]
        arr = acc
    if squeeze:
        arr = arr[:, :, 0]
    return np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)


def synthetic_photo(seed: int, height: int = 256, width: int = 256) -> np.ndarray:
    """Photograph-like RGB fixture: smooth color field plus band-limited detail."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(40.0, 215.0, (height // 16 + 2, width // 16 + 2, 3))
    ys = np.linspace(0.0, base.shape[0] - 1.001, height)
    xs = np.linspace(0.0, base.shape[1] - 1.001, width)
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    up = (
        (1 - fy) * (1 - fx) * base[y0][:, x0]
        + (1 - fy) * fx * base[y0][:, x0 + 1]
        + fy * (1 - fx) * base[y0 + 1][:, x0]
        + fy * fx * base[y0 + 1][:, x0 + 1]
    )
    detail = gaussian_blur(rng.normal(0.0, 1.0, (height, width)) * 60.0 + 128.0, 1.2)
    img = up + (detail.astype(np.float64) - 128.0)[:, :, None] * 0.5
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    return float(10.0 * np.log10(255.0**2 / mse))


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)
