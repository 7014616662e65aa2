import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from conftest import synthetic_photo
from uhreval import compression_ratio, fid_from_moments, glcm_score, plcc, srcc, to_gray
from uhreval.stats import GaussianMoments

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def run_cli(*args, cwd=None, env=None, stdin=None):
    import os

    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "uhreval", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=full_env,
        input=stdin,
    )


def make_image_dir(tmp_path, count=3, size=96):
    img_dir = tmp_path / "images"
    img_dir.mkdir()
    for i in range(count):
        Image.fromarray(synthetic_photo(40 + i, size, size)).save(img_dir / f"img_{i}.png")
    return img_dir


class TestScoreCommand:
    def test_report_schema_and_values(self, tmp_path):
        img_dir = make_image_dir(tmp_path)
        out = tmp_path / "report.json"
        csv_out = tmp_path / "report.csv"
        result = run_cli(
            "score", "--input", str(img_dir), "--out", str(out), "--csv", str(csv_out),
            "--threads", "1",
        )
        assert result.returncode == 0, result.stderr
        report = json.loads(out.read_text())
        assert set(report) == {"settings", "per_image", "aggregate"}
        assert report["settings"] == {
            "patch_side": 64,
            "gray_levels": 64,
            "jpeg_quality": 95,
            "jpeg_subsampling": "4:4:4",
        }
        assert len(report["per_image"]) == 3
        assert csv_out.read_text().splitlines()[0].startswith("path,glcm_score")
        # Values match direct library calls at report precision.
        img = np.asarray(Image.open(sorted(img_dir.iterdir())[0]).convert("RGB"))
        expected = float(f"{glcm_score(to_gray(img), threads=1):.6g}")
        assert report["per_image"][0]["glcm_score"] == expected
        expected_ratio = float(f"{compression_ratio(img):.6g}")
        assert report["per_image"][0]["compression_ratio"] == expected_ratio

    def test_byte_identical_across_threads(self, tmp_path):
        img_dir = make_image_dir(tmp_path)
        out1 = tmp_path / "r1.json"
        out2 = tmp_path / "r2.json"
        assert run_cli("score", "--input", str(img_dir), "--out", str(out1), "--threads", "1").returncode == 0
        assert run_cli("score", "--input", str(img_dir), "--out", str(out2), "--threads", "4").returncode == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_manifest_input(self, tmp_path):
        img_dir = make_image_dir(tmp_path, count=2)
        manifest = tmp_path / "m.jsonl"
        lines = []
        for p in sorted(img_dir.iterdir()):
            lines.append(json.dumps({"path": f"images/{p.name}", "width": 96, "height": 96}))
        manifest.write_text("\n".join(lines) + "\n")
        out = tmp_path / "report.json"
        result = run_cli("score", "--input", str(manifest), "--out", str(out), "--threads", "1")
        assert result.returncode == 0, result.stderr
        assert len(json.loads(out.read_text())["per_image"]) == 2

    def test_env_override_and_flag_priority(self, tmp_path):
        img_dir = make_image_dir(tmp_path, count=1)
        out = tmp_path / "report.json"
        env = {"UHREVAL_JPEG_QUALITY": "75"}
        assert run_cli("score", "--input", str(img_dir), "--out", str(out), "--threads", "1", env=env).returncode == 0
        assert json.loads(out.read_text())["settings"]["jpeg_quality"] == 75
        assert run_cli(
            "score", "--input", str(img_dir), "--out", str(out), "--jpeg-quality", "50",
            "--threads", "1", env=env,
        ).returncode == 0
        assert json.loads(out.read_text())["settings"]["jpeg_quality"] == 50

    def test_threads_env_override(self, tmp_path):
        img_dir = make_image_dir(tmp_path, count=2)
        out_env = tmp_path / "env.json"
        out_flag = tmp_path / "flag.json"
        result = run_cli(
            "score", "--input", str(img_dir), "--out", str(out_env),
            env={"UHREVAL_THREADS": "2"},
        )
        assert result.returncode == 0, result.stderr
        assert run_cli("score", "--input", str(img_dir), "--out", str(out_flag), "--threads", "1").returncode == 0
        assert out_env.read_bytes() == out_flag.read_bytes()

    def test_holistic_sidecar(self, tmp_path):
        img_dir = make_image_dir(tmp_path, count=1)
        sidecar = tmp_path / "holistic.json"
        sidecar.write_text('{"fid": 38.38, "clipscore": 34.42, "aesthetics": 6.37}')
        out = tmp_path / "report.json"
        result = run_cli(
            "score", "--input", str(img_dir), "--out", str(out),
            "--holistic", str(sidecar), "--threads", "1",
        )
        assert result.returncode == 0, result.stderr
        assert json.loads(out.read_text())["holistic"]["fid"] == 38.38

    def test_missing_input_is_io_error(self, tmp_path):
        result = run_cli("score", "--input", str(tmp_path / "nope"), "--out", str(tmp_path / "r.json"))
        assert result.returncode == 2
        assert result.stderr.strip()

    def test_unknown_flag_is_usage_error(self):
        result = run_cli("score", "--frobnicate")
        assert result.returncode == 1
        assert "usage" in result.stderr.lower()

    def test_image_too_small_is_compute_error(self, tmp_path):
        img_dir = tmp_path / "images"
        img_dir.mkdir()
        Image.fromarray(np.zeros((32, 32, 3), dtype=np.uint8)).save(img_dir / "small.png")
        result = run_cli("score", "--input", str(img_dir), "--out", str(tmp_path / "r.json"), "--threads", "1")
        assert result.returncode == 3
        assert "small.png" in result.stderr


class TestGolden:
    def test_score_reproduces_golden_report(self, tmp_path):
        shutil.copytree(FIXTURES / "golden_images", tmp_path / "fixtures")
        result = run_cli(
            "score", "--input", "fixtures", "--out", "report.json", "--threads", "1",
            cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "report.json").read_bytes() == (FIXTURES / "golden_report.json").read_bytes()

    def test_golden_stable_across_threads(self, tmp_path):
        shutil.copytree(FIXTURES / "golden_images", tmp_path / "fixtures")
        result = run_cli(
            "score", "--input", "fixtures", "--out", "report.json", "--threads", "3",
            cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "report.json").read_bytes() == (FIXTURES / "golden_report.json").read_bytes()


class TestCompareCommand:
    def test_self_comparison(self, tmp_path):
        img_dir = make_image_dir(tmp_path, count=2)
        report = tmp_path / "report.json"
        run_cli("score", "--input", str(img_dir), "--out", str(report), "--threads", "1")
        out = tmp_path / "compare.json"
        result = run_cli("compare", "--a", str(report), "--b", str(report), "--out", str(out))
        assert result.returncode == 0, result.stderr
        obj = json.loads(out.read_text())
        assert obj["win_rate"] == {"glcm_score": 0.5, "compression_ratio": 0.5}

    def test_mismatched_reports(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        entry = {
            "path": "x.png", "glcm_score": 0.5, "compression_ratio": 5.0,
            "patch_count": 1, "width": 64, "height": 64,
        }
        a.write_text(json.dumps({"per_image": [entry]}))
        b.write_text(json.dumps({"per_image": [dict(entry, path="y.png")]}))
        result = run_cli("compare", "--a", str(a), "--b", str(b), "--out", str(tmp_path / "c.json"))
        assert result.returncode == 3
        assert "x.png" in result.stderr and "y.png" in result.stderr


class TestWaveletCommand:
    def test_dumps_four_subbands(self, tmp_path):
        src = tmp_path / "img.png"
        Image.fromarray(synthetic_photo(50, 64, 64)).save(src)
        out_dir = tmp_path / "bands"
        result = run_cli("wavelet", "--input", str(src), "--out-dir", str(out_dir))
        assert result.returncode == 0, result.stderr
        names = sorted(p.name for p in out_dir.iterdir())
        assert names == ["hh.png", "hl.png", "lh.png", "ll.png"]
        for name in names:
            band = np.asarray(Image.open(out_dir / name))
            assert band.shape == (32, 32, 3)

    def test_odd_dims_is_compute_error(self, tmp_path):
        src = tmp_path / "img.png"
        Image.fromarray(synthetic_photo(51, 33, 64)).save(src)
        result = run_cli("wavelet", "--input", str(src), "--out-dir", str(tmp_path / "bands"))
        assert result.returncode == 3


class TestCurateCommand:
    def write_manifest(self, path, records):
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n")

    def test_stats(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        self.write_manifest(
            manifest,
            [
                {"path": "a.png", "width": 10, "height": 30},
                {"path": "b.png", "width": 20, "height": 10},
                {"path": "c.png", "width": 30, "height": 20},
            ],
        )
        result = run_cli("curate", "stats", "--manifest", str(manifest))
        assert result.returncode == 0, result.stderr
        obj = json.loads(result.stdout)
        assert obj == {
            "count": 3, "median_height": 20, "median_width": 20,
            "mean_height": 20.0, "mean_width": 20.0,
        }

    def test_filter(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        self.write_manifest(
            manifest,
            [
                {"path": "keep.png", "width": 4097, "height": 5000},
                {"path": "drop.png", "width": 4096, "height": 5000},
            ],
        )
        out = tmp_path / "filtered.jsonl"
        result = run_cli(
            "curate", "filter", "--manifest", str(manifest),
            "--min-short-side", "4096", "--out", str(out),
        )
        assert result.returncode == 0, result.stderr
        kept = [json.loads(line) for line in out.read_text().splitlines()]
        assert [r["path"] for r in kept] == ["keep.png"]

    def test_caption_with_stub_backend(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        self.write_manifest(manifest, [{"path": "a.png", "width": 10, "height": 10}])
        out = tmp_path / "captioned.jsonl"
        result = run_cli(
            "curate", "caption", "--manifest", str(manifest), "--out", str(out),
            "--backend", "stub",
        )
        assert result.returncode == 0, result.stderr
        assert json.loads(out.read_text())["caption"] == "caption:a.png"

    def test_caption_http_requires_endpoint(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        self.write_manifest(manifest, [{"path": "a.png", "width": 10, "height": 10}])
        result = run_cli(
            "curate", "caption", "--manifest", str(manifest), "--out", str(tmp_path / "o.jsonl"),
            env={"UHREVAL_CAPTION_ENDPOINT": ""},
        )
        assert result.returncode == 3

    def test_approve(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        self.write_manifest(
            manifest,
            [
                {"path": "a.png", "width": 10, "height": 10},
                {"path": "b.png", "width": 10, "height": 10},
            ],
        )
        out = tmp_path / "approved.jsonl"
        result = run_cli(
            "curate", "approve", "--manifest", str(manifest), "--path", "a.png", "--out", str(out)
        )
        assert result.returncode == 0, result.stderr
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert rows[0]["approved"] is True
        assert "approved" not in rows[1]

    def test_malformed_manifest_is_io_error(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        manifest.write_text("not json\n")
        result = run_cli("curate", "stats", "--manifest", str(manifest))
        assert result.returncode == 2


class TestCorrelateCommand:
    def test_prints_srcc_plcc(self, tmp_path):
        entries = [
            {"path": f"img_{i}.png", "glcm_score": v, "compression_ratio": 10.0 - v,
             "patch_count": 1, "width": 64, "height": 64}
            for i, v in enumerate([0.2, 0.5, 0.4, 0.9, 0.7])
        ]
        report = tmp_path / "report.json"
        report.write_text(json.dumps({"per_image": entries}))
        ratings = tmp_path / "ratings.csv"
        human = [2.0, 6.0, 5.0, 9.0, 7.0]
        ratings.write_text(
            "path,rating\n" + "".join(f"img_{i}.png,{r}\n" for i, r in enumerate(human))
        )
        result = run_cli(
            "correlate", "--ratings", str(ratings), "--metric", "glcm_score",
            "--report", str(report),
        )
        assert result.returncode == 0, result.stderr
        lines = result.stdout.splitlines()
        metric = [0.2, 0.5, 0.4, 0.9, 0.7]
        assert lines[0] == f"SRCC {srcc(metric, human):.6g}"
        assert lines[1] == f"PLCC {plcc(metric, human):.6g}"

    def test_too_few_matches_is_compute_error(self, tmp_path):
        report = tmp_path / "report.json"
        report.write_text(json.dumps({"per_image": []}))
        ratings = tmp_path / "ratings.csv"
        ratings.write_text("path,rating\nx.png,5\n")
        result = run_cli(
            "correlate", "--ratings", str(ratings), "--metric", "glcm_score",
            "--report", str(report),
        )
        assert result.returncode == 3


class TestFidCommand:
    def test_from_feature_csvs(self, tmp_path, rng):
        a = rng.normal(size=(30, 4))
        b = rng.normal(size=(25, 4)) + 0.5
        fa = tmp_path / "a.csv"
        fb = tmp_path / "b.csv"
        header = "f0,f1,f2,f3"
        fa.write_text(header + "\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in a) + "\n")
        fb.write_text(header + "\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in b) + "\n")
        result = run_cli("fid", "--features-a", str(fa), "--features-b", str(fb))
        assert result.returncode == 0, result.stderr
        from uhreval.stats import moments_from_features

        expected = fid_from_moments(moments_from_features(a), moments_from_features(b))
        assert result.stdout.strip() == f"FID {expected:.6g}"

    def test_from_moments_json(self, tmp_path):
        fa = tmp_path / "a.json"
        fb = tmp_path / "b.json"
        fa.write_text('{"d": 1, "mean": [0.0], "cov": [[1.0]]}')
        fb.write_text('{"d": 1, "mean": [1.0], "cov": [[1.0]]}')
        result = run_cli("fid", "--features-a", str(fa), "--features-b", str(fb))
        assert result.returncode == 0, result.stderr
        assert result.stdout.strip() == "FID 1"


class TestKernelCommand:
    def test_glcm_score_kernel(self, rng):
        data = rng.integers(0, 256, (128, 128))
        request = json.dumps({"data": data.tolist(), "patch_side": 64, "levels": 64})
        result = run_cli("kernel", "glcm-score", stdin=request)
        assert result.returncode == 0, result.stderr
        response = json.loads(result.stdout)
        expected = glcm_score(data.astype(np.uint8), threads=1)
        assert abs(response["glcm_score"] - expected) <= 1e-12

    def test_dwt_idwt_round_trip(self, rng):
        x = rng.normal(size=(2, 8, 8))
        request = json.dumps(
            {"channels": 2, "height": 8, "width": 8, "data": x.ravel().tolist()}
        )
        result = run_cli("kernel", "dwt", stdin=request)
        assert result.returncode == 0, result.stderr
        bands = json.loads(result.stdout)
        assert bands["height"] == 4 and bands["width"] == 4
        back = run_cli("kernel", "idwt", stdin=json.dumps(bands))
        assert back.returncode == 0, back.stderr
        restored = np.asarray(json.loads(back.stdout)["data"]).reshape(2, 8, 8)
        assert np.max(np.abs(restored - x)) <= 1e-9

    def test_wlf_kernel_uniform_equals_rf(self, rng):
        u = rng.normal(size=(1, 8, 8))
        v = rng.normal(size=(1, 8, 8))
        request = json.dumps(
            {
                "channels": 1, "height": 8, "width": 8,
                "v_hat": v.ravel().tolist(), "u": u.ravel().tolist(), "w_t": 1.5,
            }
        )
        result = run_cli("kernel", "wlf-loss", stdin=request)
        assert result.returncode == 0, result.stderr
        rf = 1.5 * float(np.mean((u - v) ** 2))
        assert abs(json.loads(result.stdout)["wlf_loss"] - rf) / rf <= 1e-5

    def test_compression_ratio_kernel(self):
        img = np.full((64, 48, 3), 77, dtype=np.uint8)
        request = json.dumps(
            {"width": 48, "height": 64, "rgb": img.ravel().tolist(), "quality": 95}
        )
        result = run_cli("kernel", "compression-ratio", stdin=request)
        assert result.returncode == 0, result.stderr
        assert json.loads(result.stdout)["compression_ratio"] == compression_ratio(img)

    def test_bad_payload_shape_is_compute_error(self):
        request = json.dumps({"channels": 1, "height": 4, "width": 4, "data": [1.0, 2.0]})
        result = run_cli("kernel", "dwt", stdin=request)
        assert result.returncode == 3


class TestVersion:
    def test_version_flag(self):
        result = run_cli("--version")
        assert result.returncode == 0
        assert result.stdout.strip() == "uhreval 0.1.0"
