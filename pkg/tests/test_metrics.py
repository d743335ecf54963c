import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photorestore.errors import RegionError, ShapeError
from photorestore.imaging import make_rng
from photorestore.metrics import (
    PSNR_CAP_DB,
    masked_psnr,
    mse,
    psnr,
    report,
    ssim,
)
from synth import constant_image, make_scene


class TestPsnr:
    def test_identical_hits_cap(self, scene_color):
        assert psnr(scene_color, scene_color) == 99.0

    def test_opposite_extremes_zero_db(self):
        a = constant_image(0, 16, 16, 1)
        b = constant_image(255, 16, 16, 1)
        assert psnr(a, b) == pytest.approx(0.0, abs=1e-9)

    def test_two_pixel_hand_case(self):
        a = np.array([[0, 0]], dtype=np.uint8)
        b = np.array([[0, 10]], dtype=np.uint8)
        assert mse(a, b) == pytest.approx(50.0)
        assert psnr(a, b) == pytest.approx(31.14, abs=0.01)
        assert psnr(a, b) == pytest.approx(10 * math.log10(65025 / 50), abs=1e-12)

    def test_symmetric(self, scene_gray):
        other = make_scene(seed=44, h=96, w=96, color=False)
        assert psnr(scene_gray, other) == psnr(other, scene_gray)

    def test_invariant_under_common_pixel_permutation(self, scene_gray):
        other = make_scene(seed=45, h=96, w=96, color=False)
        perm = make_rng(3).permutation(scene_gray.size)
        pa = scene_gray.ravel()[perm].reshape(scene_gray.shape)
        pb = other.ravel()[perm].reshape(other.shape)
        assert psnr(pa, pb) == pytest.approx(psnr(scene_gray, other), abs=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            psnr(np.zeros((4, 4), dtype=np.uint8), np.zeros((4, 5), dtype=np.uint8))
        with pytest.raises(ShapeError):
            psnr(np.zeros((4, 4), dtype=np.uint8), np.zeros((4, 4, 3), dtype=np.uint8))


class TestSsim:
    def test_identical_is_one(self, scene_color):
        assert ssim(scene_color, scene_color) == pytest.approx(1.0, abs=1e-9)

    def test_constant_offset_matches_closed_form(self):
        a = constant_image(100, 16, 16, 1)
        b = constant_image(150, 16, 16, 1)
        c1 = (0.01 * 255) ** 2
        # variances and covariance vanish, so only the luminance term is left
        want = (2 * 100 * 150 + c1) / (100 ** 2 + 150 ** 2 + c1)
        assert ssim(a, b) == pytest.approx(want, abs=1e-12)

    def test_independent_noise_scores_near_zero(self):
        a = make_rng(1).integers(0, 256, size=(256, 256), dtype=np.uint8)
        b = make_rng(2).integers(0, 256, size=(256, 256), dtype=np.uint8)
        assert abs(ssim(a, b)) < 0.1

    def test_symmetric(self, scene_gray):
        other = make_scene(seed=46, h=96, w=96, color=False)
        assert ssim(scene_gray, other) == pytest.approx(ssim(other, scene_gray), abs=1e-12)

    def test_small_images_rejected(self):
        small = np.zeros((7, 20), dtype=np.uint8)
        with pytest.raises(ShapeError):
            ssim(small, small)

    def test_trailing_partial_windows_ignored(self):
        a = make_scene(seed=9, h=19, w=21, color=False)
        b = make_scene(seed=10, h=19, w=21, color=False)
        assert ssim(a, b) == pytest.approx(ssim(a[:16, :16], b[:16, :16]), abs=1e-12)


class TestMaskedPsnr:
    def test_checkerboard_matches_bruteforce(self):
        rng = make_rng(6)
        a = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
        b = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
        mask = np.indices((16, 16)).sum(axis=0) % 2
        mask = (mask * 255).astype(np.uint8)
        got_in, got_out = masked_psnr(a, b, mask)
        diff = a.astype(float) - b.astype(float)
        mse_in = float((diff[mask > 0] ** 2).mean())
        mse_out = float((diff[mask == 0] ** 2).mean())
        assert got_in == pytest.approx(10 * math.log10(255 ** 2 / mse_in), abs=1e-12)
        assert got_out == pytest.approx(10 * math.log10(255 ** 2 / mse_out), abs=1e-12)

    def test_untouched_region_hits_cap(self, scene_gray):
        mask = np.zeros(scene_gray.shape, dtype=np.uint8)
        mask[20:32, 24:36] = 255
        modified = scene_gray.copy()
        modified[mask > 0] = 255
        in_db, out_db = masked_psnr(modified, scene_gray, mask)
        assert out_db == PSNR_CAP_DB
        assert in_db < PSNR_CAP_DB

    def test_partition_identity(self):
        # pixel-count-weighted MSEs of the two regions recompose the global MSE
        rng = make_rng(11)
        for trial in range(5):
            a = rng.integers(0, 256, size=(24, 24), dtype=np.uint8)
            b = rng.integers(0, 256, size=(24, 24), dtype=np.uint8)
            mask = (rng.random((24, 24)) < 0.3).astype(np.uint8) * 255
            if not (mask > 0).any() or (mask > 0).all():
                continue
            in_db, out_db = masked_psnr(a, b, mask)
            n_in = int((mask > 0).sum())
            n_out = mask.size - n_in
            mse_in = 255.0 ** 2 / 10 ** (in_db / 10)
            mse_out = 255.0 ** 2 / 10 ** (out_db / 10)
            recomposed = (mse_in * n_in + mse_out * n_out) / mask.size
            assert recomposed == pytest.approx(mse(a, b), abs=1e-6)

    def test_color_pair_weighted_identity(self):
        rng = make_rng(12)
        a = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        b = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        mask = np.zeros((16, 16), dtype=np.uint8)
        mask[:8] = 255
        in_db, out_db = masked_psnr(a, b, mask)
        mse_in = 255.0 ** 2 / 10 ** (in_db / 10)
        mse_out = 255.0 ** 2 / 10 ** (out_db / 10)
        assert (mse_in + mse_out) / 2 == pytest.approx(mse(a, b), abs=1e-6)

    @pytest.mark.parametrize("fill", [0, 255])
    def test_degenerate_masks_rejected(self, scene_gray, fill):
        mask = np.full(scene_gray.shape, fill, dtype=np.uint8)
        with pytest.raises(RegionError):
            masked_psnr(scene_gray, scene_gray, mask)


class TestReport:
    def test_bundle_with_mask(self, scene_gray, box_mask):
        other = make_scene(seed=47, h=64, w=64, color=False)
        me = make_scene(seed=48, h=64, w=64, color=False)
        rep = report(me, other, box_mask)
        assert rep.psnr_db == psnr(me, other)
        assert rep.ssim == ssim(me, other)
        assert rep.psnr_in_mask is not None
        row = rep.to_row()
        assert set(row) == {"psnr", "ssim", "psnr_in_mask", "psnr_out_mask"}

    def test_bundle_without_mask(self, scene_color):
        rep = report(scene_color, scene_color)
        assert rep.psnr_db == 99.0
        assert rep.psnr_in_mask is None
        assert rep.to_row()["psnr_in_mask"] is None


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_psnr_nonnegative_and_capped(seed):
    rng = make_rng(seed)
    a = rng.integers(0, 256, size=(12, 12), dtype=np.uint8)
    b = rng.integers(0, 256, size=(12, 12), dtype=np.uint8)
    val = psnr(a, b)
    assert 0.0 <= val <= 99.0


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_ssim_bounded(seed):
    rng = make_rng(seed)
    a = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
    b = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
    assert -1.0 <= ssim(a, b) <= 1.0
