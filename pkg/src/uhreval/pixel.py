"""Image and tensor primitives: loading, grayscale conversion, quantization, tiling.

Array conventions used across the package:

* RGB image      -- uint8 array of shape (H, W, 3), row-major
* grayscale      -- uint8 array of shape (H, W)
* quantized gray -- uint8 array of shape (H, W) with values in [0, levels)
* tensor         -- float64 array of shape (C, H, W), all values finite
"""

from __future__ import annotations

import numpy as np
from PIL import Image

# ITU-R BT.601 luma coefficients.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114

# Quantization levels must evenly divide the 8-bit range.
VALID_GRAY_LEVELS = frozenset({2, 4, 8, 16, 32, 64, 128, 256})


def check_rgb(img: np.ndarray) -> np.ndarray:
    """Validate a uint8 (H, W, 3) RGB array and return it."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB array, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB samples, got dtype {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def check_gray(img: np.ndarray) -> np.ndarray:
    """Validate a uint8 (H, W) grayscale array and return it."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"expected (H, W) grayscale array, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 gray samples, got dtype {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Coerce to a finite float64 (C, H, W) tensor."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{name} must have shape (C, H, W), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def load_rgb(path) -> np.ndarray:
    """Read a PNG or JPEG file into a uint8 (H, W, 3) RGB array.

    16-bit inputs are down-converted by keeping the high byte; grayscale,
    palette and alpha-carrying modes are converted to plain 8-bit RGB.
    """
    with Image.open(path) as img:
        if img.mode in ("I;16", "I;16B", "I;16L", "I;16N"):
            arr = (np.asarray(img, dtype=np.uint32) >> 8).astype(np.uint8)
            return np.repeat(arr[:, :, None], 3, axis=2)
        if img.mode == "I":
            # Pillow stores 16-bit PNGs as 32-bit ints on some versions.
            arr = np.asarray(img, dtype=np.int64)
            arr = np.clip(arr >> 8, 0, 255).astype(np.uint8)
            return np.repeat(arr[:, :, None], 3, axis=2)
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def to_gray(img: np.ndarray) -> np.ndarray:
    """BT.601 luma with round-half-up: y = round(0.299 R + 0.587 G + 0.114 B)."""
    img = check_rgb(img)
    r = img[:, :, 0].astype(np.float64)
    g = img[:, :, 1].astype(np.float64)
    b = img[:, :, 2].astype(np.float64)
    y = _LUMA_R * r + _LUMA_G * g + _LUMA_B * b
    return np.clip(np.floor(y + 0.5), 0.0, 255.0).astype(np.uint8)


def quantize(img: np.ndarray, levels: int) -> np.ndarray:
    """Uniformly bin 8-bit gray values into `levels` bins: v -> floor(v / (256 / levels))."""
    img = check_gray(img)
    if levels not in VALID_GRAY_LEVELS:
        raise ValueError(f"levels must be one of {sorted(VALID_GRAY_LEVELS)}, got {levels}")
    return (img // (256 // levels)).astype(np.uint8)


def partition(img: np.ndarray, side: int) -> np.ndarray:
    """Cut a gray image into non-overlapping side x side tiles, row-major.

    Incomplete border tiles are discarded; padding would inject artificial
    texture into entropy statistics. Returns a (P, side, side) stack, which
    is empty (P = 0) when no full tile fits.
    """
    img = check_gray(img)
    if side < 2:
        raise ValueError(f"patch side must be >= 2, got {side}")
    rows = img.shape[0] // side
    cols = img.shape[1] // side
    if rows == 0 or cols == 0:
        return np.zeros((0, side, side), dtype=img.dtype)
    tiles = img[: rows * side, : cols * side].reshape(rows, side, cols, side)
    return np.ascontiguousarray(tiles.swapaxes(1, 2).reshape(rows * cols, side, side))
