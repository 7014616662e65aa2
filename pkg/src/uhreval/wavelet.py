"""Single-level 2D Haar wavelet transform with orthonormal kernels.

The four analysis kernels are the outer products of the low-pass filter
L = (1/sqrt(2))[1, 1] and high-pass filter H = (1/sqrt(2))[-1, 1], applied
with stride 2 and independently per channel. The lh band carries detail
along the width (L vertically, H horizontally); hl carries detail along
the height. Orthonormality makes the transform energy-preserving and the
inverse equal to the transpose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pixel import as_tensor


@dataclass(frozen=True)
class SubbandSet:
    """The four sub-bands of one transform level, each of shape (C, H/2, W/2)."""

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def __post_init__(self):
        shape = np.asarray(self.ll).shape
        for name in ("lh", "hl", "hh"):
            band = np.asarray(getattr(self, name))
            if band.shape != shape:
                raise ValueError(f"sub-band {name} shape {band.shape} differs from ll shape {shape}")

    def bands(self) -> dict[str, np.ndarray]:
        return {"ll": self.ll, "lh": self.lh, "hl": self.hl, "hh": self.hh}


def dwt(x) -> SubbandSet:
    """Decompose a (C, H, W) tensor into LL/LH/HL/HH half-resolution sub-bands.

    H and W must be even; callers decide how to pad odd inputs.
    """
    x = as_tensor(x, "input")
    _, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"spatial dims must be even, got {h}x{w}")
    a = x[:, 0::2, 0::2]
    b = x[:, 0::2, 1::2]
    c = x[:, 1::2, 0::2]
    d = x[:, 1::2, 1::2]
    return SubbandSet(
        ll=0.5 * (a + b + c + d),
        lh=0.5 * (b + d - a - c),
        hl=0.5 * (c + d - a - b),
        hh=0.5 * (a + d - b - c),
    )


def idwt(s: SubbandSet) -> np.ndarray:
    """Invert dwt: idwt(dwt(x)) == x up to float rounding."""
    ll = as_tensor(s.ll, "ll")
    lh = as_tensor(s.lh, "lh")
    hl = as_tensor(s.hl, "hl")
    hh = as_tensor(s.hh, "hh")
    if not (ll.shape == lh.shape == hl.shape == hh.shape):
        raise ValueError("sub-band shapes differ")
    ch, h2, w2 = ll.shape
    out = np.empty((ch, 2 * h2, 2 * w2), dtype=np.float64)
    out[:, 0::2, 0::2] = 0.5 * (ll - lh - hl + hh)
    out[:, 0::2, 1::2] = 0.5 * (ll + lh - hl - hh)
    out[:, 1::2, 0::2] = 0.5 * (ll - lh + hl - hh)
    out[:, 1::2, 1::2] = 0.5 * (ll + lh + hl + hh)
    return out
