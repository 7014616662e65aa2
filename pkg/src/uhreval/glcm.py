"""Gray-level co-occurrence matrices, normalized entropy, and the patch texture score.

The texture score of an image is the mean, over all non-overlapping
quantized patches, of the mean normalized GLCM entropy across 16
displacement offsets (distances 1-4 at 0/45/90/135 degrees). Scores live
in [0, 1]: a constant image scores exactly 0, maximal pair diversity
scores 1. Reported as positive "higher is richer texture".
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .pixel import check_gray, partition, quantize

# Row/column displacement per unit distance for the four canonical angles.
_UNIT_DISPLACEMENT = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}

# Patches per work item; fixed so results never depend on worker count.
_CHUNK_SIZE = 256


@dataclass(frozen=True)
class GlcmOffset:
    """Co-occurrence displacement: distance `delta` at angle `theta` degrees."""

    delta: int
    theta: int

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        if self.theta not in _UNIT_DISPLACEMENT:
            raise ValueError(f"theta must be one of {sorted(_UNIT_DISPLACEMENT)}, got {self.theta}")

    def displacement(self) -> tuple[int, int]:
        dr, dc = _UNIT_DISPLACEMENT[self.theta]
        return dr * self.delta, dc * self.delta


DEFAULT_OFFSETS: tuple[GlcmOffset, ...] = tuple(
    GlcmOffset(delta, theta) for delta in (1, 2, 3, 4) for theta in (0, 45, 90, 135)
)


@dataclass(frozen=True)
class Glcm:
    """Symmetric co-occurrence probability matrix over `levels` gray levels."""

    levels: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs)
        if probs.shape != (self.levels, self.levels):
            raise ValueError(f"probs must be {self.levels}x{self.levels}, got {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")


def _check_patch(patch: np.ndarray, offset: GlcmOffset, levels: int) -> np.ndarray:
    patch = np.asarray(patch)
    if patch.ndim != 2 or patch.shape[0] != patch.shape[1]:
        raise ValueError(f"patch must be square, got shape {patch.shape}")
    if offset.delta >= patch.shape[0]:
        raise ValueError(f"offset delta {offset.delta} must be smaller than patch side {patch.shape[0]}")
    if patch.max(initial=0) >= levels:
        raise ValueError(f"patch values must be < levels ({levels})")
    return patch


def cooccurrence_counts(patch: np.ndarray, offset: GlcmOffset, levels: int = 64) -> np.ndarray:
    """Integer co-occurrence counts, accumulated symmetrically (both orderings)."""
    patch = _check_patch(patch, offset, levels)
    side = patch.shape[0]
    dr, dc = offset.displacement()
    r0, r1 = max(0, -dr), side - max(0, dr)
    c0, c1 = max(0, -dc), side - max(0, dc)
    a = patch[r0:r1, c0:c1].astype(np.int64).ravel()
    b = patch[r0 + dr : r1 + dr, c0 + dc : c1 + dc].astype(np.int64).ravel()
    codes = np.concatenate([a * levels + b, b * levels + a])
    return np.bincount(codes, minlength=levels * levels).reshape(levels, levels)


def glcm(patch: np.ndarray, offset: GlcmOffset, levels: int = 64) -> Glcm:
    """Normalized symmetric GLCM of one quantized patch for one offset."""
    counts = cooccurrence_counts(patch, offset, levels)
    total = int(counts.sum())
    if total == 0:
        raise ValueError("patch admits no co-occurring pairs for this offset")
    return Glcm(levels=levels, probs=counts / total)


def glcm_entropy(g: Glcm) -> float:
    """Shannon entropy of the GLCM, normalized by log2(levels^2) into [0, 1]."""
    p = np.asarray(g.probs, dtype=np.float64).ravel()
    if p.sum() == 0.0:
        raise ValueError("degenerate all-zero GLCM has no entropy")
    plogp = np.zeros_like(p)
    nz = p > 0
    plogp[nz] = p[nz] * np.log2(p[nz])
    return float(-plogp.sum() / (2.0 * math.log2(g.levels)))


def _mean_entropies(stack: np.ndarray, levels: int, offsets: tuple[GlcmOffset, ...]) -> np.ndarray:
    """Per-patch mean normalized entropy over offsets for a (n, side, side) stack.

    Every patch shares one pair total per offset, so p*log2(p) is evaluated
    once per possible count through a lookup table; the table entries use
    the same float operations as `glcm_entropy`, keeping both paths
    numerically identical.
    """
    n, side, _ = stack.shape
    denom = 2.0 * math.log2(levels)
    cells = levels * levels
    base = np.arange(n, dtype=np.int64)[:, None] * cells
    ent = np.empty((n, len(offsets)), dtype=np.float64)
    for k, off in enumerate(offsets):
        dr, dc = off.displacement()
        r0, r1 = max(0, -dr), side - max(0, dr)
        c0, c1 = max(0, -dc), side - max(0, dc)
        a = stack[:, r0:r1, c0:c1].astype(np.int64).reshape(n, -1)
        b = stack[:, r0 + dr : r1 + dr, c0 + dc : c1 + dc].astype(np.int64).reshape(n, -1)
        a *= levels
        a += b
        a += base
        one_way = np.bincount(a.ravel(), minlength=n * cells).reshape(n, levels, levels)
        counts = one_way + one_way.transpose(0, 2, 1)
        total = 2 * (r1 - r0) * (c1 - c0)
        with np.errstate(divide="ignore", invalid="ignore"):
            prob = np.arange(total + 1, dtype=np.float64) / total
            plogp = prob * np.log2(prob)
        plogp[0] = 0.0
        ent[:, k] = -plogp[counts.reshape(n, cells)].sum(axis=1) / denom
    return ent.mean(axis=1)


def _entropy_chunk(args) -> np.ndarray:
    stack, levels, offsets = args
    return _mean_entropies(stack, levels, offsets)


def resolve_threads(threads: int | None) -> int:
    """Explicit thread count, or the machine's logical CPU count."""
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def patch_mean_entropies(
    img: np.ndarray,
    side: int = 64,
    levels: int = 64,
    offsets: tuple[GlcmOffset, ...] = DEFAULT_OFFSETS,
    threads: int | None = None,
    chunk_size: int = _CHUNK_SIZE,
) -> np.ndarray:
    """Per-patch offset-averaged entropies of an 8-bit gray image, in patch order.

    Work is split into fixed-size patch chunks and aggregated in patch order,
    so the result is identical for any worker count.
    """
    img = check_gray(img)
    offsets = tuple(offsets)
    if not offsets:
        raise ValueError("at least one offset is required")
    for off in offsets:
        if off.delta >= side:
            raise ValueError(f"offset delta {off.delta} must be smaller than patch side {side}")
    patches = partition(quantize(img, levels), side)
    if patches.shape[0] == 0:
        raise ValueError(f"image {img.shape[1]}x{img.shape[0]} admits no full {side}x{side} patch")
    chunks = [patches[i : i + chunk_size] for i in range(0, patches.shape[0], chunk_size)]
    # Oversubscribing CPU-bound workers only adds scheduling churn.
    workers = min(resolve_threads(threads), os.cpu_count() or 1, len(chunks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_entropy_chunk, [(c, levels, offsets) for c in chunks]))
    else:
        parts = [_mean_entropies(c, levels, offsets) for c in chunks]
    return np.concatenate(parts)


def glcm_score(
    img: np.ndarray,
    side: int = 64,
    levels: int = 64,
    offsets: tuple[GlcmOffset, ...] = DEFAULT_OFFSETS,
    threads: int | None = None,
    chunk_size: int = _CHUNK_SIZE,
) -> float:
    """Mean normalized GLCM entropy of an 8-bit gray image over all full patches."""
    return float(np.mean(patch_mean_entropies(img, side, levels, offsets, threads, chunk_size)))
