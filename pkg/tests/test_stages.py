import numpy as np
import pytest

from photorestore.errors import ParameterError
from photorestore.imaging import add_gaussian_noise, make_rng
from photorestore.metrics import psnr
from photorestore.stages import (
    SEPIA_GAINS,
    STAGE_ORDER,
    StageParams,
    auto_steps,
    colorize_reference,
    denoise_reference,
    estimate_noise_sigma,
    face_restore_reference,
    inpaint_reference,
)
from synth import constant_image, horizontal_gradient, make_scene


def params(**kw) -> StageParams:
    kw.setdefault("backend_id", "test.reference")
    return StageParams(**kw)


def test_stage_order_is_fixed():
    assert STAGE_ORDER == ("damage", "denoise", "face", "colorize")


class TestStageParams:
    def test_roundtrip(self):
        p = params(strength=0.25, steps=7, extras={"mode": "sepia"})
        assert StageParams.from_dict(p.to_dict()) == p

    @pytest.mark.parametrize("kw", [
        {"strength": -0.1},
        {"strength": 1.01},
        {"steps": 0},
        {"guidance": -1.0},
        {"upscale": 0},
    ])
    def test_bounds_enforced(self, kw):
        with pytest.raises(ParameterError):
            params(**kw)


class TestInpaint:
    def test_unmasked_pixels_bit_exact(self, scene_gray):
        mask = np.zeros(scene_gray.shape, dtype=np.uint8)
        mask[40:50, 40:55] = 255
        out = inpaint_reference(scene_gray, mask, params())
        assert np.array_equal(out[mask == 0], scene_gray[mask == 0])

    def test_flat_image_hole_filled_flat(self):
        img = constant_image(180, 32, 32, 1)
        mask = np.zeros((32, 32), dtype=np.uint8)
        mask[10:20, 10:20] = 255
        out = inpaint_reference(img, mask, params())
        assert np.all(out == 180)

    def test_linear_ramp_reconstructed(self):
        # a linear ramp is harmonic, so diffusion reproduces it inside the hole
        img = horizontal_gradient(48, 48)
        mask = np.zeros((48, 48), dtype=np.uint8)
        mask[16:32, 16:32] = 255
        out = inpaint_reference(img, mask, params(steps=60))
        err = np.abs(out[mask > 0].astype(int) - img[mask > 0].astype(int))
        assert err.max() <= 2

    def test_empty_mask_is_copy(self, scene_gray):
        mask = np.zeros(scene_gray.shape, dtype=np.uint8)
        out = inpaint_reference(scene_gray, mask, params())
        assert np.array_equal(out, scene_gray)
        assert out is not scene_gray

    def test_full_mask_rejected(self, scene_gray):
        mask = np.full(scene_gray.shape, 255, dtype=np.uint8)
        with pytest.raises(ParameterError):
            inpaint_reference(scene_gray, mask, params())

    def test_deterministic(self, scene_color, box_mask):
        mask = np.zeros(scene_color.shape[:2], dtype=np.uint8)
        mask[20:30, 20:30] = 255
        a = inpaint_reference(scene_color, mask, params())
        b = inpaint_reference(scene_color, mask, params())
        assert np.array_equal(a, b)

    def test_color_channels_filled_independently(self):
        img = np.zeros((24, 24, 3), dtype=np.uint8)
        img[..., 0] = 200
        img[..., 1] = 90
        img[..., 2] = 30
        mask = np.zeros((24, 24), dtype=np.uint8)
        mask[8:16, 8:16] = 255
        out = inpaint_reference(img, mask, params())
        assert np.all(out[..., 0] == 200)
        assert np.all(out[..., 1] == 90)
        assert np.all(out[..., 2] == 30)

    def test_repairs_white_crack_on_scene(self, scene_gray):
        mask = np.zeros(scene_gray.shape, dtype=np.uint8)
        mask[45:48, 5:90] = 255
        damaged = scene_gray.copy()
        damaged[mask > 0] = 255
        repaired = inpaint_reference(damaged, mask, params())
        assert psnr(repaired, scene_gray) > psnr(damaged, scene_gray) + 3.0

    def test_budget_respected_on_tiny_steps(self, scene_gray):
        # steps=1 gives a 50-sweep budget; must still terminate and fill
        mask = np.zeros(scene_gray.shape, dtype=np.uint8)
        mask[10:14, 10:14] = 255
        out = inpaint_reference(scene_gray, mask, params(steps=1))
        assert out.shape == scene_gray.shape


class TestDenoise:
    def test_strength_zero_identity(self, scene_color):
        out = denoise_reference(scene_color, params(strength=0.0))
        assert np.array_equal(out, scene_color)
        assert out is not scene_color

    def test_reduces_noise_on_synthetic_scene(self):
        clean = make_scene(seed=30, h=80, w=80, color=False)
        noisy = add_gaussian_noise(clean, 15.0, make_rng(3))
        den = denoise_reference(noisy, params(strength=0.008, steps=50))
        assert psnr(den, clean) > psnr(noisy, clean)

    def test_more_effort_smooths_more(self):
        clean = constant_image(128, 48, 48, 1)
        noisy = add_gaussian_noise(clean, 20.0, make_rng(1))
        weak = denoise_reference(noisy, params(strength=0.004, steps=50))
        strong = denoise_reference(noisy, params(strength=0.08, steps=50))
        assert strong.astype(float).std() < weak.astype(float).std()

    def test_effort_caps_saturate(self, scene_gray):
        # once both sigmas hit their caps, more effort changes nothing
        a = denoise_reference(scene_gray, params(strength=1.0, steps=50))
        b = denoise_reference(scene_gray, params(strength=1.0, steps=500))
        assert np.array_equal(a, b)

    def test_deterministic(self, scene_color):
        a = denoise_reference(scene_color, params(strength=0.01, steps=40))
        b = denoise_reference(scene_color, params(strength=0.01, steps=40))
        assert np.array_equal(a, b)


class TestNoiseEstimator:
    def test_estimates_injected_sigma(self):
        flat = constant_image(128, 192, 192, 1)
        noisy = add_gaussian_noise(flat, 10.0, make_rng(8))
        est = estimate_noise_sigma(noisy)
        assert 7.0 <= est <= 13.0

    def test_monotone_in_true_sigma(self):
        flat = constant_image(128, 128, 128, 1)
        estimates = [estimate_noise_sigma(add_gaussian_noise(flat, s, make_rng(2)))
                     for s in (3.0, 10.0, 20.0)]
        assert estimates[0] < estimates[1] < estimates[2]

    def test_clean_flat_image_near_zero(self):
        assert estimate_noise_sigma(constant_image(90, 64, 64, 1)) == 0.0

    def test_auto_steps_clamped(self):
        flat = constant_image(128, 96, 96, 1)
        assert auto_steps(flat) == 10
        very_noisy = add_gaussian_noise(flat, 80.0, make_rng(5))
        assert auto_steps(very_noisy, k=5.0) == 100

    def test_auto_steps_scales_with_k(self):
        flat = constant_image(128, 96, 96, 1)
        noisy = add_gaussian_noise(flat, 12.0, make_rng(4))
        assert auto_steps(noisy, k=1.0) <= auto_steps(noisy, k=3.0)


class TestFaceRestore:
    def test_identity_when_unscaled_and_zero_strength(self, scene_color):
        out = face_restore_reference(scene_color, params(strength=0.0, upscale=1))
        assert np.array_equal(out, scene_color)
        assert out is not scene_color

    @pytest.mark.parametrize("factor", [2, 4])
    def test_upscale_doubles_dims(self, scene_gray, factor):
        out = face_restore_reference(scene_gray, params(strength=0.0, upscale=factor))
        assert out.shape == (scene_gray.shape[0] * factor, scene_gray.shape[1] * factor)

    def test_invalid_upscale_rejected(self, scene_gray):
        with pytest.raises(ParameterError):
            face_restore_reference(scene_gray, params(upscale=3))

    def test_sharpening_boosts_edge_contrast(self):
        img = np.zeros((32, 32), dtype=np.uint8)
        img[:, 16:] = 160
        out = face_restore_reference(img, params(strength=1.0, upscale=1))
        # unsharp masking overshoots on both sides of the step
        assert int(out[16, 16]) > 160
        assert int(out[16, 15]) < 10

    def test_flat_image_unchanged_by_sharpening(self):
        img = constant_image(113, 24, 24, 3)
        out = face_restore_reference(img, params(strength=1.0, upscale=1))
        assert np.array_equal(out, img)

    def test_deterministic(self, scene_color):
        a = face_restore_reference(scene_color, params(strength=0.5, upscale=2))
        b = face_restore_reference(scene_color, params(strength=0.5, upscale=2))
        assert np.array_equal(a, b)


class TestColorize:
    def test_neutral_replicates_gray(self, scene_gray):
        out = colorize_reference(scene_gray, params(extras={"mode": "neutral"}))
        assert out.shape == scene_gray.shape + (3,)
        for c in range(3):
            assert np.array_equal(out[..., c], scene_gray)

    def test_default_mode_is_neutral(self, scene_gray):
        out = colorize_reference(scene_gray, params())
        assert np.array_equal(out[..., 0], scene_gray)

    def test_sepia_gains_on_midgray(self):
        img = constant_image(100, 8, 8, 1)
        out = colorize_reference(img, params(extras={"mode": "sepia"}))
        want = [int(np.floor(g * 100 + 0.5)) for g in SEPIA_GAINS]
        assert [int(out[0, 0, c]) for c in range(3)] == want
        # warm ordering
        assert out[0, 0, 0] > out[0, 0, 1] > out[0, 0, 2]

    def test_sepia_clamps_highlights(self):
        img = constant_image(250, 8, 8, 1)
        out = colorize_reference(img, params(extras={"mode": "sepia"}))
        assert int(out[0, 0, 0]) == 255  # 1.07 * 250 = 267.5, clamped

    def test_color_input_collapsed_first(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        img[..., 0] = 255  # pure red -> luma 76
        out = colorize_reference(img, params(extras={"mode": "neutral"}))
        assert np.all(out == 76)

    def test_unknown_mode_rejected(self, scene_gray):
        with pytest.raises(ParameterError):
            colorize_reference(scene_gray, params(extras={"mode": "technicolor"}))
