"""Command-line entry point binding the metric, wavelet, stats and curation
modules into reproducible workflows.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 computation error.
Defaults mirror the evaluation protocol (64px patches, 64 gray levels,
JPEG quality 95). Flags win over UHREVAL_* environment variables, which
win over defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path, PurePath

import numpy as np
from PIL import Image

from . import __version__, curation, stats
from .glcm import glcm_score
from .jpeg import JpegSettings, compression_ratio
from .pixel import load_rgb
from .report import (
    ScoreSettings,
    build_report,
    compare_sets,
    format_float,
    load_holistic,
    report_to_csv,
    report_to_json,
    scatter_csv,
    score_paths,
)
from .wavelet import SubbandSet, dwt, idwt

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_COMPUTE = 3

_IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}

_KERNELS = ("glcm-score", "compression-ratio", "dwt", "idwt", "wlf-loss")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().rstrip()}")


def _env(name: str) -> str | None:
    return os.environ.get(f"UHREVAL_{name}")


def _setting(flag_value, env_name: str, default, cast):
    if flag_value is not None:
        return flag_value
    env_value = _env(env_name)
    if env_value is not None:
        try:
            return cast(env_value)
        except ValueError as exc:
            raise UsageError(f"invalid UHREVAL_{env_name}={env_value!r}: {exc}") from exc
    return default


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uhreval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"uhreval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="compute per-image texture and compression metrics")
    score.add_argument("--input", required=True, help="image directory or .jsonl manifest")
    score.add_argument("--patch-size", type=int, default=None)
    score.add_argument("--gray-levels", type=int, default=None)
    score.add_argument("--jpeg-quality", type=int, default=None)
    score.add_argument("--jpeg-subsampling", choices=["4:4:4", "4:2:0"], default=None)
    score.add_argument("--out", required=True, help="report JSON path")
    score.add_argument("--csv", default=None, help="also export per-image rows as CSV")
    score.add_argument("--plot", default=None, help="emit per-image scatter data as CSV")
    score.add_argument("--holistic", default=None, help="sidecar JSON of external holistic scores")
    score.add_argument("--threads", type=int, default=None)

    compare = sub.add_parser("compare", help="win rates between two score reports")
    compare.add_argument("--a", required=True)
    compare.add_argument("--b", required=True)
    compare.add_argument("--out", required=True)

    wavelet = sub.add_parser("wavelet", help="dump the four wavelet sub-bands of an image")
    wavelet.add_argument("--input", required=True)
    wavelet.add_argument("--out-dir", required=True)

    curate = sub.add_parser("curate", help="manifest statistics, filtering, captioning, approval")
    curate_sub = curate.add_subparsers(dest="curate_command", required=True)

    cstats = curate_sub.add_parser("stats", help="dimension statistics of a manifest")
    cstats.add_argument("--manifest", required=True)

    cfilter = curate_sub.add_parser("filter", help="keep records whose short side exceeds a threshold")
    cfilter.add_argument("--manifest", required=True)
    cfilter.add_argument("--min-short-side", type=int, required=True)
    cfilter.add_argument("--inclusive", action="store_true", help="use >= instead of strict >")
    cfilter.add_argument("--out", required=True)

    ccaption = curate_sub.add_parser("caption", help="fill in captions via a backend")
    ccaption.add_argument("--manifest", required=True)
    ccaption.add_argument("--out", required=True)
    ccaption.add_argument("--template", default="image-caption", choices=sorted(curation.TEMPLATES))
    ccaption.add_argument("--backend", default="http", choices=["http", "stub"])
    ccaption.add_argument("--backend-config", default=None, help="JSON file with endpoint/model/token")
    ccaption.add_argument("--concurrency", type=int, default=4)

    capprove = curate_sub.add_parser("approve", help="set the manual-inspection approval flag")
    capprove.add_argument("--manifest", required=True)
    capprove.add_argument("--path", required=True, help="record path to mark")
    capprove.add_argument("--revoke", action="store_true")
    capprove.add_argument("--out", required=True)

    correlate = sub.add_parser("correlate", help="SRCC/PLCC of a report metric against ratings")
    correlate.add_argument("--ratings", required=True, help="CSV with header, columns path,rating")
    correlate.add_argument("--metric", required=True, choices=["glcm_score", "compression_ratio"])
    correlate.add_argument("--report", required=True)

    fid = sub.add_parser("fid", help="Frechet distance from feature CSVs or moments JSONs")
    fid.add_argument("--features-a", required=True)
    fid.add_argument("--features-b", required=True)

    kernel = sub.add_parser("kernel", help="evaluate one numeric kernel on a JSON request (stdin->stdout)")
    kernel.add_argument("name", choices=_KERNELS)

    return parser


def _collect_image_paths(input_path: str) -> list[str]:
    path = Path(input_path)
    if path.is_dir():
        found = sorted(
            p.as_posix() for p in path.iterdir() if p.suffix.lower() in _IMAGE_EXTENSIONS
        )
        if not found:
            raise FileNotFoundError(f"no PNG/JPEG images in directory {input_path}")
        return found
    if path.suffix == ".jsonl":
        records = curation.read_manifest(path)
        if not records:
            raise FileNotFoundError(f"manifest {input_path} is empty")
        base = path.parent
        return [
            r.path if PurePath(r.path).is_absolute() else (base / r.path).as_posix()
            for r in records
        ]
    raise FileNotFoundError(f"{input_path} is neither a directory nor a .jsonl manifest")


def _cmd_score(args) -> int:
    settings = ScoreSettings(
        patch_side=_setting(args.patch_size, "PATCH_SIZE", 64, int),
        gray_levels=_setting(args.gray_levels, "GRAY_LEVELS", 64, int),
        jpeg_quality=_setting(args.jpeg_quality, "JPEG_QUALITY", 95, int),
        jpeg_subsampling=_setting(args.jpeg_subsampling, "JPEG_SUBSAMPLING", "4:4:4", str),
    )
    threads = _setting(args.threads, "THREADS", None, int)
    paths = _collect_image_paths(args.input)
    holistic = load_holistic(args.holistic) if args.holistic else None
    entries = score_paths(paths, settings, threads=threads)
    report = build_report(entries, settings, holistic=holistic)
    Path(args.out).write_text(report_to_json(report), encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(report_to_csv(report), encoding="utf-8")
    if args.plot:
        Path(args.plot).write_text(scatter_csv(report), encoding="utf-8")
    return 0


def _read_report(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_compare(args) -> int:
    result = compare_sets(_read_report(args.a), _read_report(args.b))
    rounded = {
        "count": result["count"],
        "win_rate": {k: format_float(v) for k, v in result["win_rate"].items()},
    }
    Path(args.out).write_text(json.dumps(rounded, indent=2) + "\n", encoding="utf-8")
    return 0


def _cmd_wavelet(args) -> int:
    img = load_rgb(args.input)
    tensor = np.transpose(img, (2, 0, 1)).astype(np.float64)
    bands = dwt(tensor)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, band in bands.bands().items():
        lo, hi = float(band.min()), float(band.max())
        scaled = np.zeros_like(band) if hi == lo else (band - lo) * (255.0 / (hi - lo))
        plane = np.transpose(np.floor(scaled + 0.5).astype(np.uint8), (1, 2, 0))
        Image.fromarray(plane, mode="RGB").save(out_dir / f"{name}.png")
    return 0


def _cmd_curate(args) -> int:
    records = curation.read_manifest(args.manifest)
    if args.curate_command == "stats":
        summary = curation.dataset_stats(records)
        print(
            json.dumps(
                {
                    "count": summary.count,
                    "median_height": summary.median_height,
                    "median_width": summary.median_width,
                    "mean_height": format_float(summary.mean_height),
                    "mean_width": format_float(summary.mean_width),
                },
                indent=2,
            )
        )
        return 0
    if args.curate_command == "filter":
        kept = curation.filter_short_side(records, args.min_short_side, inclusive=args.inclusive)
        curation.write_manifest(kept, args.out)
        print(f"kept {len(kept)} of {len(records)} records")
        return 0
    if args.curate_command == "caption":
        if args.backend == "stub":
            backend = curation.StubCaptionBackend()
        elif args.backend_config:
            backend = curation.backend_from_config(args.backend_config)
        else:
            backend = curation.backend_from_env()
        template = curation.TEMPLATES[args.template]
        curation.caption_records(records, template, backend, concurrency=args.concurrency)
        curation.write_manifest(records, args.out)
        print(f"captioned {len(records)} records")
        return 0
    if args.curate_command == "approve":
        matched = [r for r in records if r.path == args.path]
        if not matched:
            raise ValueError(f"no record with path {args.path!r} in {args.manifest}")
        for record in matched:
            record.approved = not args.revoke
        curation.write_manifest(records, args.out)
        print(f"{'revoked' if args.revoke else 'approved'} {len(matched)} record(s)")
        return 0
    raise UsageError(f"unknown curate command {args.curate_command!r}")


def _cmd_correlate(args) -> int:
    report = _read_report(args.report)
    metric_by_name = {PurePath(e["path"]).name: e[args.metric] for e in report["per_image"]}
    pairs = stats.read_ratings_csv(args.ratings)
    metric_values, ratings = [], []
    for key, rating in pairs:
        name = PurePath(key).name
        if name in metric_by_name:
            metric_values.append(metric_by_name[name])
            ratings.append(rating)
    if len(metric_values) < 3:
        raise ValueError(
            f"only {len(metric_values)} rating rows match the report; need at least 3"
        )
    print(f"SRCC {stats.srcc(metric_values, ratings):.6g}")
    print(f"PLCC {stats.plcc(metric_values, ratings):.6g}")
    return 0


def _cmd_fid(args) -> int:
    a = stats.load_moments(args.features_a)
    b = stats.load_moments(args.features_b)
    print(f"FID {stats.fid_from_moments(a, b):.6g}")
    return 0


def _kernel_tensor(obj: dict, key: str) -> np.ndarray:
    shape = (int(obj["channels"]), int(obj["height"]), int(obj["width"]))
    data = np.asarray(obj[key], dtype=np.float64)
    if data.size != shape[0] * shape[1] * shape[2]:
        raise ValueError(f"{key} has {data.size} values, expected {shape[0] * shape[1] * shape[2]}")
    return data.reshape(shape)


def _cmd_kernel(args) -> int:
    request = json.load(sys.stdin)
    if args.name == "glcm-score":
        data = np.asarray(request["data"], dtype=np.int64)
        if data.ndim != 2 or data.min(initial=0) < 0 or data.max(initial=0) > 255:
            raise ValueError("data must be a 2-D array of 8-bit gray values")
        score = glcm_score(
            data.astype(np.uint8),
            side=int(request.get("patch_side", 64)),
            levels=int(request.get("levels", 64)),
            threads=1,
        )
        response = {"glcm_score": score}
    elif args.name == "compression-ratio":
        width, height = int(request["width"]), int(request["height"])
        rgb = np.asarray(request["rgb"], dtype=np.int64)
        if rgb.size != 3 * width * height or rgb.min(initial=0) < 0 or rgb.max(initial=0) > 255:
            raise ValueError("rgb must hold 3*width*height 8-bit samples")
        img = rgb.astype(np.uint8).reshape(height, width, 3)
        settings = JpegSettings(
            quality=int(request.get("quality", 95)),
            subsampling=request.get("subsampling", "4:4:4"),
        )
        response = {"compression_ratio": compression_ratio(img, settings)}
    elif args.name == "dwt":
        bands = dwt(_kernel_tensor(request, "data"))
        response = {
            "channels": bands.ll.shape[0],
            "height": bands.ll.shape[1],
            "width": bands.ll.shape[2],
            **{name: band.ravel().tolist() for name, band in bands.bands().items()},
        }
    elif args.name == "idwt":
        bands = SubbandSet(
            ll=_kernel_tensor(request, "ll"),
            lh=_kernel_tensor(request, "lh"),
            hl=_kernel_tensor(request, "hl"),
            hh=_kernel_tensor(request, "hh"),
        )
        out = idwt(bands)
        response = {
            "channels": out.shape[0],
            "height": out.shape[1],
            "width": out.shape[2],
            "data": out.ravel().tolist(),
        }
    elif args.name == "wlf-loss":
        from .diffusion import wavelet_velocity_mse

        value = wavelet_velocity_mse(
            _kernel_tensor(request, "v_hat"),
            _kernel_tensor(request, "u"),
            w_t=float(request.get("w_t", 1.0)),
            subband_weights=tuple(request.get("subband_weights", (1.0, 1.0, 1.0, 1.0))),
        )
        response = {"wlf_loss": value}
    else:
        raise UsageError(f"unknown kernel {args.name!r}")
    json.dump(response, sys.stdout)
    sys.stdout.write("\n")
    return 0


_COMMANDS = {
    "score": _cmd_score,
    "compare": _cmd_compare,
    "wavelet": _cmd_wavelet,
    "curate": _cmd_curate,
    "correlate": _cmd_correlate,
    "fid": _cmd_fid,
    "kernel": _cmd_kernel,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"uhreval: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (curation.ManifestError, json.JSONDecodeError) as exc:
        print(f"uhreval: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"uhreval: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, curation.CaptionTransportError) as exc:
        print(f"uhreval: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


def entrypoint():
    sys.exit(main())
