import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fba.core import (
    ColorMap,
    DimensionMismatchError,
    PixelMap,
    PredictionSet,
    ValueRangeError,
    clamp_unit,
    composite,
    premultiply,
)

from conftest import grid_color, grid_map


def unit_floats(shape):
    return arrays(
        np.float32, shape, elements=st.floats(0.0, 1.0, width=32, allow_nan=False)
    )


class TestContainers:
    def test_pixelmap_is_float32_readonly(self):
        m = PixelMap(np.zeros((4, 5), dtype=np.float64))
        assert m.data.dtype == np.float32
        assert not m.data.flags.writeable
        assert (m.height, m.width) == (4, 5)
        with pytest.raises(ValueError):
            m.data[0, 0] = 1.0

    def test_pixelmap_rejects_wrong_rank(self):
        with pytest.raises(ValueRangeError):
            PixelMap(np.zeros((3, 4, 5), dtype=np.float32))

    def test_colormap_shape_is_spatial(self):
        c = ColorMap(np.zeros((3, 7, 9), dtype=np.float32))
        assert c.shape == (7, 9)
        assert (c.height, c.width) == (7, 9)

    def test_colormap_rejects_wrong_channels(self):
        with pytest.raises(ValueRangeError):
            ColorMap(np.zeros((4, 7, 9), dtype=np.float32))

    def test_interleaved_round_trip(self, rng):
        c = grid_color(rng, 6, 8)
        back = ColorMap.from_interleaved(c.to_interleaved())
        assert np.array_equal(back.data, c.data)

    def test_prediction_set_validates_dims_and_range(self, rng):
        alpha = grid_map(rng, 4, 4)
        fg = grid_color(rng, 4, 4)
        with pytest.raises(DimensionMismatchError):
            PredictionSet(alpha=alpha, fg=fg, bg=grid_color(rng, 4, 5))
        bad = PixelMap(np.full((4, 4), 1.5, dtype=np.float32))
        with pytest.raises(ValueRangeError):
            PredictionSet(alpha=bad, fg=fg, bg=grid_color(rng, 4, 4))

    def test_dimension_error_message_names_operands(self):
        err = DimensionMismatchError("alpha", (8, 6), "fg", (4, 4))
        assert str(err) == "dimension mismatch: alpha (8, 6) vs fg (4, 4)"
        assert err.pair == (("alpha", (8, 6)), ("fg", (4, 4)))


class TestComposite:
    def test_matches_formula(self, rng):
        alpha = grid_map(rng, 5, 7)
        fg = grid_color(rng, 5, 7)
        bg = grid_color(rng, 5, 7)
        out = composite(alpha, fg, bg)
        a = alpha.data[None].astype(np.float64)
        want = a * fg.data + (1.0 - a) * bg.data
        assert np.allclose(out.data, want, atol=0.0)

    def test_opaque_matte_returns_fg_bitwise(self, rng):
        fg = grid_color(rng, 5, 5)
        bg = grid_color(rng, 5, 5)
        ones = PixelMap(np.ones((5, 5), dtype=np.float32))
        assert np.array_equal(composite(ones, fg, bg).data, fg.data)

    def test_transparent_matte_returns_bg_bitwise(self, rng):
        fg = grid_color(rng, 5, 5)
        bg = grid_color(rng, 5, 5)
        zeros = PixelMap(np.zeros((5, 5), dtype=np.float32))
        assert np.array_equal(composite(zeros, fg, bg).data, bg.data)

    def test_rejects_out_of_range_alpha(self, rng):
        alpha = PixelMap(np.full((4, 4), -0.25, dtype=np.float32))
        with pytest.raises(ValueRangeError):
            composite(alpha, grid_color(rng, 4, 4), grid_color(rng, 4, 4))

    def test_rejects_dim_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            composite(grid_map(rng, 4, 4), grid_color(rng, 4, 5), grid_color(rng, 4, 4))

    @settings(max_examples=25, deadline=None)
    @given(
        alpha=unit_floats((6, 6)), fg=unit_floats((3, 6, 6)), bg=unit_floats((3, 6, 6))
    )
    def test_output_stays_in_unit_range(self, alpha, fg, bg):
        out = composite(PixelMap(alpha), ColorMap(fg), ColorMap(bg))
        assert float(out.data.min()) >= 0.0
        assert float(out.data.max()) <= 1.0


class TestHelpers:
    def test_premultiply(self, rng):
        alpha = grid_map(rng, 4, 6)
        fg = grid_color(rng, 4, 6)
        out = premultiply(alpha, fg)
        assert np.array_equal(out.data, alpha.data[None] * fg.data)

    @settings(max_examples=25, deadline=None)
    @given(arr=arrays(np.float32, (3, 4, 4), elements=st.floats(-2, 2, width=32)))
    def test_clamp_unit_idempotent(self, arr):
        once = clamp_unit(ColorMap(arr))
        twice = clamp_unit(once)
        assert float(once.data.min()) >= 0.0
        assert float(once.data.max()) <= 1.0
        assert np.array_equal(once.data, twice.data)

    def test_clamp_unit_rejects_other_types(self):
        with pytest.raises(TypeError):
            clamp_unit(np.zeros((4, 4)))
