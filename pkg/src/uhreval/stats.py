"""Rank/linear correlation with tie handling, and Frechet distance between
Gaussian feature moments.

The matrix square root inside the Frechet distance uses symmetric
eigendecomposition with negative eigenvalues clamped to zero; iterative
square-root schemes were rejected because their stopping criteria make
test tolerances machine-dependent.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

_SYMMETRY_TOL = 1e-9


def rankdata_average(x) -> np.ndarray:
    """1-based ranks; tied values receive the mean of their rank span."""
    a = np.asarray(x, dtype=np.float64).ravel()
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(a.size, dtype=np.float64)
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _check_series(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValueError(f"series lengths differ: {a.size} vs {b.size}")
    if a.size < 3:
        raise ValueError(f"need at least 3 paired observations, got {a.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("series contain non-finite values")
    return a, b


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    ssa = float(np.sum(a * a))
    ssb = float(np.sum(b * b))
    if ssa == 0.0 or ssb == 0.0:
        raise ValueError("undefined correlation: a series has zero variance")
    return float(np.sum(a * b) / np.sqrt(ssa * ssb))


def plcc(x, y) -> float:
    """Pearson product-moment correlation of two paired series."""
    a, b = _check_series(x, y)
    return _pearson(a, b)


def srcc(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    a, b = _check_series(x, y)
    return _pearson(rankdata_average(a), rankdata_average(b))


@dataclass(frozen=True)
class GaussianMoments:
    """Mean vector and symmetric PSD covariance of a feature population."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.size < 1:
            raise ValueError("mean must have at least one dimension")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match dimension {mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("moments contain non-finite values")
        if np.max(np.abs(cov - cov.T)) > _SYMMETRY_TOL:
            raise ValueError("covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def moments_from_features(features) -> GaussianMoments:
    """Sample mean and unbiased covariance of an (n, d) feature matrix."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"features must be an (n, d) matrix, got shape {x.shape}")
    if x.shape[0] < 2:
        raise ValueError(f"need at least 2 feature rows, got {x.shape[0]}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    # Force exact symmetry against accumulation asymmetries.
    cov = 0.5 * (cov + cov.T)
    return GaussianMoments(mean=mean, cov=cov)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    sym = 0.5 * (m + m.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def fid_from_moments(a: GaussianMoments, b: GaussianMoments) -> float:
    """Frechet distance between two Gaussians given their moments.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), with
    the inner root computed via eigendecomposition and eigenvalue clamping.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.mean - b.mean
    root_a = _psd_sqrt(a.cov)
    inner = root_a @ b.cov @ root_a
    eigvals = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    trace_root = float(np.sum(np.sqrt(np.clip(eigvals, 0.0, None))))
    fid = float(diff @ diff) + float(np.trace(a.cov)) + float(np.trace(b.cov)) - 2.0 * trace_root
    return max(fid, 0.0)


def read_feature_matrix(path) -> np.ndarray:
    """Load an (n, d) float matrix from CSV with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty feature file")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no feature rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows in feature matrix")
    return np.asarray(rows, dtype=np.float64)


def read_moments_json(path) -> GaussianMoments:
    """Load precomputed moments from JSON: {"d": d, "mean": [...], "cov": [...]}.

    The covariance may be row-major flat (d*d values) or nested rows.
    """
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    d = int(obj["d"])
    mean = np.asarray(obj["mean"], dtype=np.float64)
    cov = np.asarray(obj["cov"], dtype=np.float64)
    if cov.ndim == 1:
        cov = cov.reshape(d, d)
    return GaussianMoments(mean=mean, cov=cov)


def load_moments(path) -> GaussianMoments:
    """Moments from a .json moments file or a .csv feature matrix."""
    text = str(path)
    if text.endswith(".json"):
        return read_moments_json(path)
    return moments_from_features(read_feature_matrix(path))


def read_ratings_csv(path) -> list[tuple[str, float]]:
    """Load (key, rating) pairs from a two-column CSV with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError(f"{path}: expected a header row with at least two columns")
        pairs = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected at least two columns")
            pairs.append((row[0], float(row[1])))
    if not pairs:
        raise ValueError(f"{path}: no rating rows")
    return pairs
