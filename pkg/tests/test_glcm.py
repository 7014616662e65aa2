import numpy as np
import pytest

from uhreval.glcm import (
    DEFAULT_OFFSETS,
    Glcm,
    GlcmOffset,
    cooccurrence_counts,
    glcm,
    glcm_entropy,
    glcm_score,
)
from uhreval.pixel import partition, quantize


def naive_counts(patch: np.ndarray, offset: GlcmOffset, levels: int) -> np.ndarray:
    """Independent oracle: enumerate every pixel pair with explicit loops."""
    dr, dc = offset.displacement()
    side = patch.shape[0]
    counts = np.zeros((levels, levels), dtype=np.int64)
    for r in range(side):
        for c in range(side):
            rr, cc = r + dr, c + dc
            if 0 <= rr < side and 0 <= cc < side:
                counts[patch[r, c], patch[rr, cc]] += 1
                counts[patch[rr, cc], patch[r, c]] += 1
    return counts


def naive_entropy(counts: np.ndarray, levels: int) -> float:
    p = counts.astype(np.float64) / counts.sum()
    acc = 0.0
    for v in p.ravel():
        if v > 0:
            acc -= v * np.log2(v)
    return acc / np.log2(levels * levels)


def checkerboard(side=64, low=0, high=63):
    board = np.indices((side, side)).sum(axis=0) % 2
    return np.where(board == 0, low, high).astype(np.uint8)


class TestOffsets:
    def test_default_grid_has_16(self):
        assert len(DEFAULT_OFFSETS) == 16
        assert {o.delta for o in DEFAULT_OFFSETS} == {1, 2, 3, 4}
        assert {o.theta for o in DEFAULT_OFFSETS} == {0, 45, 90, 135}

    @pytest.mark.parametrize(
        "theta,expected", [(0, (0, 1)), (45, (-1, 1)), (90, (-1, 0)), (135, (-1, -1))]
    )
    def test_unit_displacements(self, theta, expected):
        assert GlcmOffset(1, theta).displacement() == expected

    def test_delta_scales_displacement(self):
        assert GlcmOffset(3, 45).displacement() == (-3, 3)

    def test_invalid_offsets(self):
        with pytest.raises(ValueError):
            GlcmOffset(0, 0)
        with pytest.raises(ValueError):
            GlcmOffset(1, 30)


class TestGlcm:
    def test_constant_patch_single_mass(self):
        patch = np.full((16, 16), 5, dtype=np.uint8)
        for off in (GlcmOffset(1, 0), GlcmOffset(2, 135)):
            g = glcm(patch, off, levels=64)
            assert g.probs[5, 5] == 1.0
            assert g.probs.sum() == 1.0

    def test_checkerboard_horizontal(self):
        g = glcm(checkerboard(), GlcmOffset(1, 0), levels=64)
        assert g.probs[0, 63] == 0.5
        assert g.probs[63, 0] == 0.5
        assert g.probs.sum() == 1.0

    def test_matches_naive_oracle_exactly(self, rng):
        for _ in range(5):
            patch = rng.integers(0, 64, (64, 64), dtype=np.uint8)
            for off in DEFAULT_OFFSETS:
                assert np.array_equal(
                    cooccurrence_counts(patch, off, 64), naive_counts(patch, off, 64)
                )

    def test_symmetric_and_normalized(self, rng):
        for _ in range(10):
            side = int(rng.integers(6, 40))
            patch = rng.integers(0, 64, (side, side), dtype=np.uint8)
            off = GlcmOffset(int(rng.integers(1, 5)), int(rng.choice([0, 45, 90, 135])))
            if off.delta >= side:
                continue
            g = glcm(patch, off, levels=64)
            assert np.array_equal(g.probs, g.probs.T)
            assert abs(g.probs.sum() - 1.0) <= 1e-9

    def test_delta_must_fit_in_patch(self):
        patch = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(ValueError):
            glcm(patch, GlcmOffset(4, 0), levels=64)

    def test_values_must_fit_levels(self):
        patch = np.full((8, 8), 70, dtype=np.uint8)
        with pytest.raises(ValueError):
            glcm(patch, GlcmOffset(1, 0), levels=64)


class TestEntropy:
    def test_single_mass_zero(self):
        g = glcm(np.full((8, 8), 3, dtype=np.uint8), GlcmOffset(1, 0), levels=64)
        assert glcm_entropy(g) == 0.0

    def test_two_equal_masses(self):
        g = glcm(checkerboard(), GlcmOffset(1, 0), levels=64)
        assert abs(glcm_entropy(g) - 1.0 / 12.0) <= 1e-12

    def test_uniform_is_one(self):
        probs = np.full((64, 64), 1.0 / 4096.0)
        assert abs(glcm_entropy(Glcm(levels=64, probs=probs)) - 1.0) <= 1e-12

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            glcm_entropy(Glcm(levels=64, probs=np.zeros((64, 64))))

    def test_label_permutation_invariance(self, rng):
        patch = rng.integers(0, 64, (32, 32), dtype=np.uint8)
        perm = rng.permutation(64).astype(np.uint8)
        for off in (GlcmOffset(1, 0), GlcmOffset(3, 90)):
            h_orig = glcm_entropy(glcm(patch, off, levels=64))
            h_perm = glcm_entropy(glcm(perm[patch], off, levels=64))
            assert abs(h_orig - h_perm) <= 1e-12

    def test_matches_naive_entropy(self, rng):
        patch = rng.integers(0, 64, (64, 64), dtype=np.uint8)
        for off in DEFAULT_OFFSETS[:4]:
            counts = cooccurrence_counts(patch, off, 64)
            h = glcm_entropy(Glcm(levels=64, probs=counts / counts.sum()))
            assert abs(h - naive_entropy(counts, 64)) <= 1e-12


class TestScore:
    def test_constant_image_exactly_zero(self):
        img = np.full((256, 256), 170, dtype=np.uint8)
        assert glcm_score(img, threads=1) == 0.0

    def test_any_non_constant_patch_scores_positive(self):
        img = np.full((64, 64), 170, dtype=np.uint8)
        img[10, 10] = 0
        assert glcm_score(img, threads=1) > 0.0

    def test_bounds(self, rng):
        img = rng.integers(0, 256, (192, 192), dtype=np.uint8)
        assert 0.0 <= glcm_score(img, threads=1) <= 1.0

    def test_full_image_checkerboard_matches_per_patch_oracle(self):
        img = checkerboard(128, 0, 255)
        patches = partition(quantize(img, 64), 64)
        expected = float(
            np.mean(
                [
                    np.mean(
                        [naive_entropy(naive_counts(p, off, 64), 64) for off in DEFAULT_OFFSETS]
                    )
                    for p in patches
                ]
            )
        )
        assert abs(glcm_score(img, threads=1) - expected) <= 1e-12

    def test_score_equals_per_patch_entropy_path(self, rng):
        img = rng.integers(0, 256, (128, 192), dtype=np.uint8)
        patches = partition(quantize(img, 64), 64)
        direct = float(
            np.mean(
                [
                    np.mean([glcm_entropy(glcm(p, off, 64)) for off in DEFAULT_OFFSETS])
                    for p in patches
                ]
            )
        )
        assert glcm_score(img, threads=1) == direct

    def test_no_patches_rejected(self):
        with pytest.raises(ValueError):
            glcm_score(np.zeros((63, 63), dtype=np.uint8), threads=1)

    def test_delta_too_large_rejected(self):
        img = np.zeros((64, 64), dtype=np.uint8)
        with pytest.raises(ValueError):
            glcm_score(img, side=4, offsets=(GlcmOffset(4, 0),), threads=1)

    def test_identical_across_worker_and_chunk_configurations(self, rng):
        img = rng.integers(0, 256, (256, 320), dtype=np.uint8)
        baseline = glcm_score(img, threads=1)
        assert glcm_score(img, threads=4, chunk_size=4) == baseline
        assert glcm_score(img, threads=2, chunk_size=7) == baseline
        assert glcm_score(img, threads=1, chunk_size=1) == baseline
