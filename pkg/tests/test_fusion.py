import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fba.core import ColorMap, DimensionMismatchError, PixelMap, PredictionSet, ValueRangeError
from fba.fusion import FusionParams, composite_residual, fuse

import oracles
from conftest import consistent_triple, grid_color, grid_map


def _pred(alpha, fg, bg):
    return PredictionSet(alpha=PixelMap(alpha), fg=ColorMap(fg), bg=ColorMap(bg))


def _uniform(shape, value):
    return np.full(shape, value, dtype=np.float32)


class TestParams:
    def test_defaults(self):
        p = FusionParams()
        assert (p.sigma_alpha_sq, p.sigma_fb_sq, p.sigma_c_sq, p.iterations) == (
            10.0,
            1.0,
            1.0,
            1,
        )

    @pytest.mark.parametrize("field", ["sigma_alpha_sq", "sigma_fb_sq", "sigma_c_sq"])
    def test_rejects_nonpositive_variance(self, field):
        with pytest.raises(ValueRangeError):
            FusionParams(**{field: 0.0})

    def test_rejects_negative_iterations(self):
        with pytest.raises(ValueRangeError):
            FusionParams(iterations=-1)


class TestSingleSweep:
    def test_worked_single_pixel_example(self):
        # alpha 0.5, F = 1, B = 0, C = 0.8 in every channel:
        #   resid = 0.3 per channel
        #   F1 = 1.15 (clamps to 1), B1 = 0.15
        #   alpha = (0.5 + 10 * 3 * 0.65) / (1 + 10 * 3) = 20 / 31
        pred = _pred(_uniform((1, 1), 0.5), _uniform((3, 1, 1), 1.0), _uniform((3, 1, 1), 0.0))
        image = ColorMap(_uniform((3, 1, 1), 0.8))
        out = fuse(pred, image)
        assert out.fg.data[0, 0, 0] == 1.0
        assert out.bg.data[0, 0, 0] == pytest.approx(0.15, abs=1e-7)
        assert out.alpha.data[0, 0] == pytest.approx(20.0 / 31.0, abs=1e-7)

    def test_matches_scalar_reference(self, rng):
        pred, _ = consistent_triple(rng, 6, 7)
        image = grid_color(rng, 6, 7)
        out = fuse(pred, image)
        a, f, b = oracles.fusion_sweep(pred.alpha.data, pred.fg.data, pred.bg.data, image.data)
        assert np.allclose(out.alpha.data, a, atol=1e-7)
        assert np.allclose(out.fg.data, f, atol=1e-7)
        assert np.allclose(out.bg.data, b, atol=1e-7)

    def test_matches_scalar_reference_nondefault_params(self, rng):
        pred, _ = consistent_triple(rng, 5, 5)
        image = grid_color(rng, 5, 5)
        params = FusionParams(sigma_alpha_sq=2.5, sigma_fb_sq=0.5, sigma_c_sq=2.0)
        out = fuse(pred, image, params)
        a, f, b = oracles.fusion_sweep(
            pred.alpha.data, pred.fg.data, pred.bg.data, image.data, s_a=2.5, s_fb=0.5, s_c=2.0
        )
        assert np.allclose(out.alpha.data, a, atol=1e-7)
        assert np.allclose(out.fg.data, f, atol=1e-7)
        assert np.allclose(out.bg.data, b, atol=1e-7)

    def test_equal_layers_leave_alpha_unchanged(self, rng):
        # when F = B the alpha coefficient is indeterminate and the update
        # must keep the prior
        layer = grid_color(rng, 4, 4)
        alpha = grid_map(rng, 4, 4)
        pred = PredictionSet(alpha=alpha, fg=layer, bg=ColorMap(layer.data.copy()))
        image = ColorMap(layer.data.copy())
        out = fuse(pred, image)
        assert np.array_equal(out.alpha.data, alpha.data)


class TestFixedPointAndIterations:
    def test_consistent_triple_is_fixed_point(self, rng):
        pred, image = consistent_triple(rng, 12, 12)
        out = fuse(pred, image)
        assert float(np.abs(out.alpha.data - pred.alpha.data).max()) <= 1e-6
        assert float(np.abs(out.fg.data - pred.fg.data).max()) <= 1e-6
        assert float(np.abs(out.bg.data - pred.bg.data).max()) <= 1e-6

    def test_zero_iterations_returns_input_object(self, rng):
        pred, image = consistent_triple(rng, 4, 4)
        out = fuse(pred, image, FusionParams(iterations=0))
        assert out is pred

    def test_one_sweep_reduces_reconstruction_and_iterates_stay_valid(self, rng):
        # each sweep trades the data term against the pull back toward the
        # network output, so only the first sweep is guaranteed to shrink
        # the composite residual; later iterates must still be legal mattes
        pred, _ = consistent_triple(rng, 8, 8)
        image = grid_color(rng, 8, 8)
        energies = [
            composite_residual(fuse(pred, image, FusionParams(iterations=k)), image)
            for k in (0, 1, 2, 4)
        ]
        assert energies[1] < energies[0]
        assert all(np.isfinite(e) for e in energies)
        for k in (2, 4):
            out = fuse(pred, image, FusionParams(iterations=k))
            for layer in (out.alpha.data, out.fg.data, out.bg.data):
                assert layer.min() >= 0.0 and layer.max() <= 1.0

    def test_pixels_are_independent(self, rng):
        pred, _ = consistent_triple(rng, 3, 8)
        image = grid_color(rng, 3, 8)
        whole = fuse(pred, image)
        col = slice(2, 5)
        sub = PredictionSet(
            alpha=PixelMap(pred.alpha.data[:, col]),
            fg=ColorMap(pred.fg.data[:, :, col]),
            bg=ColorMap(pred.bg.data[:, :, col]),
        )
        out = fuse(sub, ColorMap(image.data[:, :, col]))
        assert np.array_equal(out.alpha.data, whole.alpha.data[:, col])
        assert np.array_equal(out.fg.data, whole.fg.data[:, :, col])
        assert np.array_equal(out.bg.data, whole.bg.data[:, :, col])


class TestValidationAndEnergy:
    def test_rejects_image_shape_mismatch(self, rng):
        pred, _ = consistent_triple(rng, 4, 4)
        with pytest.raises(DimensionMismatchError):
            fuse(pred, grid_color(rng, 4, 5))

    def test_rejects_out_of_range_layers(self, rng):
        alpha = grid_map(rng, 4, 4)
        bad_fg = ColorMap(np.full((3, 4, 4), 1.25, dtype=np.float32))
        pred = PredictionSet(alpha=alpha, fg=bad_fg, bg=grid_color(rng, 4, 4))
        with pytest.raises(ValueRangeError):
            fuse(pred, grid_color(rng, 4, 4))

    def test_residual_zero_on_consistent_triple(self, rng):
        pred, image = consistent_triple(rng, 8, 8)
        assert composite_residual(pred, image) == 0.0

    def test_residual_matches_scalar_reference(self, rng):
        pred, _ = consistent_triple(rng, 6, 6)
        image = grid_color(rng, 6, 6)
        got = composite_residual(pred, image)
        want = oracles.reconstruction_energy(
            pred.alpha.data, pred.fg.data, pred.bg.data, image.data
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_residual_ignores_bg_under_opaque_alpha(self, rng):
        fg = grid_color(rng, 4, 4)
        ones = PixelMap(np.ones((4, 4), dtype=np.float32))
        pred = PredictionSet(alpha=ones, fg=fg, bg=grid_color(rng, 4, 4))
        assert composite_residual(pred, ColorMap(fg.data.copy())) == 0.0

    @settings(max_examples=25, deadline=None)
    @given(
        alpha=arrays(np.float32, (4, 4), elements=st.floats(0, 1, width=32)),
        fg=arrays(np.float32, (3, 4, 4), elements=st.floats(0, 1, width=32)),
        bg=arrays(np.float32, (3, 4, 4), elements=st.floats(0, 1, width=32)),
        img=arrays(np.float32, (3, 4, 4), elements=st.floats(0, 1, width=32)),
    )
    def test_outputs_stay_in_unit_range(self, alpha, fg, bg, img):
        out = fuse(_pred(alpha, fg, bg), ColorMap(img), FusionParams(iterations=3))
        assert float(out.alpha.data.min()) >= 0.0
        assert float(out.alpha.data.max()) <= 1.0
        assert float(out.fg.data.min()) >= 0.0
        assert float(out.fg.data.max()) <= 1.0
        assert float(out.bg.data.min()) >= 0.0
        assert float(out.bg.data.max()) <= 1.0
