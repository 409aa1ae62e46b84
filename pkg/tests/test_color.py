import colorsys

import numpy as np
import pytest

import latentdg.color as color
from latentdg.color import hsv_to_rgb, rgb_to_hsv


def test_pure_red():
    h, s, v = rgb_to_hsv(np.array([1.0, 0.0, 0.0]))
    assert (h, s, v) == (0.0, 1.0, 1.0)


def test_achromatic_gray():
    h, s, v = rgb_to_hsv(np.array([0.5, 0.5, 0.5]))
    assert (h, s, v) == (0.0, 0.0, 0.5)


def test_matches_scalar_reference_oracle():
    # colorsys implements the literal scalar formulas, independently.
    rng = np.random.default_rng(42)
    pixels = rng.random((100, 3))
    ours = rgb_to_hsv(pixels)
    for px, got in zip(pixels, ours):
        expected = colorsys.rgb_to_hsv(*px)
        assert np.allclose(got, expected, atol=1e-9), (px, got, expected)


def test_hsv_to_rgb_matches_reference_oracle():
    rng = np.random.default_rng(43)
    hsv = rng.random((100, 3))
    ours = hsv_to_rgb(hsv)
    for px, got in zip(hsv, ours):
        expected = colorsys.hsv_to_rgb(*px)
        assert np.allclose(got, expected, atol=1e-9)


def test_round_trip_rgb_hsv_rgb():
    rng = np.random.default_rng(44)
    rgb = rng.random((500, 3))
    back = hsv_to_rgb(rgb_to_hsv(rgb))
    assert np.allclose(back, rgb, atol=1e-6)


def test_round_trip_hsv_rgb_hsv_when_saturated():
    rng = np.random.default_rng(45)
    hsv = rng.random((500, 3))
    hsv[:, 1] = 0.02 + 0.98 * hsv[:, 1]  # saturation > 0.01
    hsv[:, 2] = 0.05 + 0.95 * hsv[:, 2]  # keep value away from 0
    hsv[:, 0] *= 0.999  # avoid the 1.0 == 0.0 wrap ambiguity
    back = rgb_to_hsv(hsv_to_rgb(hsv))
    assert np.allclose(back, hsv, atol=1e-6)


def test_out_of_range_clamps_and_warns_once():
    color._warned_out_of_range = False
    with pytest.warns(UserWarning, match="clamping"):
        out = rgb_to_hsv(np.array([1.5, -0.2, 0.5]))
    assert np.all(out >= 0.0) and np.all(out <= 1.0)
    # second call: clamped silently
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rgb_to_hsv(np.array([2.0, 0.0, 0.0]))
    color._warned_out_of_range = False


def test_shape_validation():
    with pytest.raises(ValueError, match="last axis"):
        rgb_to_hsv(np.zeros((4, 4)))
    with pytest.raises(ValueError, match="last axis"):
        hsv_to_rgb(np.zeros((4, 2)))
