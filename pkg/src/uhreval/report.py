"""Per-image and aggregate metric assembly.

Reports combine the two local measures (texture score and compression
ratio) per image with optional externally computed holistic scores
ingested from a sidecar file. Serialization uses a fixed field order and
6-significant-digit float formatting so regenerating a report is
byte-identical, independent of worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from io import StringIO
from pathlib import PurePath

from .glcm import glcm_score, resolve_threads
from .jpeg import JpegSettings, compression_ratio
from .pixel import load_rgb, to_gray

_CSV_COLUMNS = ("path", "glcm_score", "compression_ratio", "patch_count", "width", "height")


@dataclass(frozen=True)
class ScoreSettings:
    """Metric knobs echoed into every report."""

    patch_side: int = 64
    gray_levels: int = 64
    jpeg_quality: int = 95
    jpeg_subsampling: str = "4:4:4"

    def jpeg(self) -> JpegSettings:
        return JpegSettings(quality=self.jpeg_quality, subsampling=self.jpeg_subsampling)


def score_image(img, settings: ScoreSettings = ScoreSettings(), path: str = "") -> dict:
    """Compute one per-image report entry from an RGB array."""
    try:
        gray = to_gray(img)
        side = settings.patch_side
        patch_count = (gray.shape[0] // side) * (gray.shape[1] // side)
        texture = glcm_score(gray, side=side, levels=settings.gray_levels, threads=1)
        ratio = compression_ratio(img, settings.jpeg())
    except ValueError as exc:
        raise ValueError(f"{path or 'image'}: {exc}") from exc
    return {
        "path": path,
        "glcm_score": texture,
        "compression_ratio": ratio,
        "patch_count": patch_count,
        "width": int(img.shape[1]),
        "height": int(img.shape[0]),
    }


def _score_path(args) -> dict:
    path, settings = args
    return score_image(load_rgb(path), settings, path=PurePath(path).as_posix())


def score_paths(paths, settings: ScoreSettings = ScoreSettings(), threads: int | None = None) -> list[dict]:
    """Score many image files, parallel over images, ordered by input path."""
    ordered = sorted(str(p) for p in paths)
    workers = resolve_threads(threads)
    jobs = [(p, settings) for p in ordered]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_score_path, jobs))
    return [_score_path(job) for job in jobs]


def build_report(entries, settings: ScoreSettings, holistic: dict | None = None) -> dict:
    """Assemble the report object: settings, per-image rows, aggregate means."""
    entries = sorted(entries, key=lambda e: e["path"])
    if not entries:
        raise ValueError("report needs at least one scored image")
    report = {
        "settings": asdict(settings),
        "per_image": entries,
        "aggregate": {
            "mean_glcm": sum(e["glcm_score"] for e in entries) / len(entries),
            "mean_ratio": sum(e["compression_ratio"] for e in entries) / len(entries),
            "count": len(entries),
        },
    }
    if holistic is not None:
        report["holistic"] = holistic
    return report


def load_holistic(path) -> dict:
    """Sidecar of externally computed scores, e.g. {"fid": ..., "clipscore": ...}."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: holistic sidecar must be a JSON object")
    for key, value in obj.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValueError(f"{path}: holistic value {key!r} must be a finite number")
    return obj


def format_float(x: float) -> float:
    """Round to 6 significant digits; reports always format floats this way."""
    return float(f"{x:.6g}")


def _rounded(obj):
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def report_to_json(report: dict) -> str:
    return json.dumps(_rounded(report), indent=2) + "\n"


def report_to_csv(report: dict) -> str:
    out = StringIO()
    out.write(",".join(_CSV_COLUMNS) + "\n")
    for entry in report["per_image"]:
        cells = []
        for column in _CSV_COLUMNS:
            value = entry[column]
            cells.append(f"{value:.6g}" if isinstance(value, float) else str(value))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def scatter_csv(report: dict) -> str:
    """Per-image (texture, ratio) pairs for external plotting."""
    out = StringIO()
    out.write("path,glcm_score,compression_ratio\n")
    for entry in report["per_image"]:
        out.write(f"{entry['path']},{entry['glcm_score']:.6g},{entry['compression_ratio']:.6g}\n")
    return out.getvalue()


def _by_basename(report: dict) -> dict[str, dict]:
    mapping = {}
    for entry in report["per_image"]:
        name = PurePath(entry["path"]).name
        if name in mapping:
            raise ValueError(f"duplicate basename in report: {name}")
        mapping[name] = entry
    return mapping


def compare_sets(report_a: dict, report_b: dict) -> dict:
    """Win rates of A over B per metric; higher texture wins, lower ratio wins.

    Ties count 0.5, so compare(A, B) + compare(B, A) is exactly 1 per metric.
    """
    a = _by_basename(report_a)
    b = _by_basename(report_b)
    only_a = sorted(set(a) - set(b))
    only_b = sorted(set(b) - set(a))
    if only_a or only_b:
        raise ValueError(f"path sets differ: only in A {only_a}, only in B {only_b}")

    def win(x: float, y: float, higher_wins: bool) -> float:
        if x == y:
            return 0.5
        return 1.0 if (x > y) == higher_wins else 0.0

    names = sorted(a)
    glcm_wins = [win(a[n]["glcm_score"], b[n]["glcm_score"], True) for n in names]
    ratio_wins = [win(a[n]["compression_ratio"], b[n]["compression_ratio"], False) for n in names]
    return {
        "count": len(names),
        "win_rate": {
            "glcm_score": sum(glcm_wins) / len(names),
            "compression_ratio": sum(ratio_wins) / len(names),
        },
    }
