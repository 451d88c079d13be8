import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvtv import imaging
from tvtv.errors import DimensionError, RangeError


def loop_mse(x, y):
    total = 0.0
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            total += (float(x[i, j]) - float(y[i, j])) ** 2
    return total / x.size


def loop_ssim(x, y, peak=255.0):
    """SSIM by explicit 11x11 window sums, one window at a time."""
    t = np.arange(11) - 5.0
    g = np.exp(-t**2 / (2 * 1.5**2))
    win = np.outer(g, g)
    win /= win.sum()
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    vals = []
    for i in range(x.shape[0] - 10):
        for j in range(x.shape[1] - 10):
            px = x[i:i + 11, j:j + 11]
            py = y[i:i + 11, j:j + 11]
            mx, my = np.sum(win * px), np.sum(win * py)
            vx = np.sum(win * (px - mx) ** 2)
            vy = np.sum(win * (py - my) ** 2)
            cxy = np.sum(win * (px - mx) * (py - my))
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2))
                        / ((mx**2 + my**2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def test_vectorize_column_major():
    assert imaging.vectorize(np.array([[1, 2], [3, 4]])).tolist() == [1, 3, 2, 4]
    assert imaging.vectorize(np.array([[7]])).tolist() == [7]


@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**31 - 1))
def test_vectorize_round_trip(M, N, seed):
    x = np.random.default_rng(seed).standard_normal((M, N))
    v = imaging.vectorize(x)
    assert v[(N - 1) * M + (M - 1)] == x[M - 1, N - 1]
    np.testing.assert_array_equal(imaging.devectorize(v, (M, N)), x)
    np.testing.assert_array_equal(imaging.vectorize(imaging.devectorize(v, (M, N))), v)


def test_devectorize_rejects_wrong_length():
    with pytest.raises(DimensionError):
        imaging.devectorize(np.zeros(5), (2, 3))


def test_luminance_black_white():
    black = np.zeros((1, 1, 3))
    white = np.full((1, 1, 3), 255.0)
    assert imaging.rgb_to_luminance(black)[0, 0] == pytest.approx(16.0)
    assert imaging.rgb_to_luminance(white)[0, 0] == pytest.approx(235.0, abs=1e-9)


def test_luminance_red_matches_skimage():
    color = pytest.importorskip("skimage.color")
    red = np.array([[[255.0, 0.0, 0.0]]])
    y = imaging.rgb_to_luminance(red)[0, 0]
    assert y == pytest.approx(16 + 65.481)
    ref = color.rgb2ycbcr(red / 255.0)[0, 0, 0]
    assert y == pytest.approx(ref, abs=1e-9)


def test_luminance_range_error():
    with pytest.raises(RangeError):
        imaging.rgb_to_luminance(np.full((1, 1, 3), 256.0))
    with pytest.raises(RangeError):
        imaging.rgb_to_luminance(np.full((1, 1, 3), -1.0))


@pytest.mark.parametrize("full_swing", [False, True])
def test_ycbcr_round_trip_8bit(full_swing):
    rgb = np.random.default_rng(3).integers(0, 256, (32, 32, 3)).astype(float)
    back = imaging.ycbcr_to_rgb(imaging.rgb_to_ycbcr(rgb, full_swing), full_swing)
    assert np.max(np.abs(back - rgb)) <= 1e-9
    assert np.max(np.abs(imaging.to_uint8(back).astype(float) - rgb)) <= 1


def test_psnr_values():
    x = np.random.default_rng(0).random((16, 16)) * 255
    assert imaging.psnr(x, x) == math.inf
    assert imaging.psnr(x, x + 1.0) == pytest.approx(48.1308036, abs=1e-6)
    y = np.random.default_rng(1).random((16, 16)) * 255
    expected = 10 * math.log10(255.0**2 / loop_mse(x, y))
    assert imaging.psnr(x, y) == pytest.approx(expected, rel=1e-12)
    assert imaging.psnr(x, y) == imaging.psnr(y, x)


def test_psnr_shape_mismatch():
    with pytest.raises(DimensionError):
        imaging.psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_psnr_decreases_with_noise():
    rng = np.random.default_rng(7)
    x = rng.random((64, 64)) * 255
    noise = rng.standard_normal((64, 64))
    values = [imaging.psnr(x, x + s * noise) for s in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_ssim_identical_and_symmetric():
    rng = np.random.default_rng(5)
    x = rng.random((32, 32)) * 255
    y = x + 10 * rng.standard_normal((32, 32))
    assert imaging.ssim(x, x) == pytest.approx(1.0, abs=1e-12)
    assert abs(imaging.ssim(x, y) - imaging.ssim(y, x)) <= 1e-12


def test_ssim_constant_closed_form():
    x = np.full((20, 20), 100.0)
    y = x + 30.0
    c1 = (0.01 * 255) ** 2
    expected = (2 * 100 * 130 + c1) / (100**2 + 130**2 + c1)
    assert imaging.ssim(x, y) == pytest.approx(expected, rel=1e-10)


def test_ssim_matches_window_loop():
    rng = np.random.default_rng(11)
    x = rng.random((32, 32)) * 255
    y = np.clip(x + 20 * rng.standard_normal((32, 32)), 0, 255)
    assert imaging.ssim(x, y) == pytest.approx(loop_ssim(x, y), abs=1e-10)


def test_ssim_matches_skimage():
    metrics = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(12)
    x = rng.random((40, 48)) * 255
    y = x + 15 * rng.standard_normal((40, 48))
    ref = metrics.structural_similarity(
        x, y, data_range=255, gaussian_weights=True, sigma=1.5,
        use_sample_covariance=False)
    assert imaging.ssim(x, y) == pytest.approx(ref, abs=1e-8)


def test_ssim_too_small():
    with pytest.raises(DimensionError):
        imaging.ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_shave_border():
    x = np.arange(100.0).reshape(10, 10)
    assert imaging.shave_border(x, 0) is x
    np.testing.assert_array_equal(imaging.shave_border(x, 2), x[2:8, 2:8])
    assert imaging.shave_border(np.zeros((11, 7)), 3).shape == (5, 1)
    with pytest.raises(DimensionError):
        imaging.shave_border(np.zeros((6, 6)), 3)


def test_crop_to_multiple():
    x = np.arange(17 * 17.0).reshape(17, 17)
    out = imaging.crop_to_multiple(x, 2)
    assert out.shape == (16, 16)
    np.testing.assert_array_equal(out, x[0:16, 0:16])
    assert imaging.crop_to_multiple(np.zeros((19, 22)), 4).shape == (16, 20)


def test_to_uint8_rounds_half_away_and_clamps():
    vals = np.array([-3.0, 0.5, 1.5, 2.5, 254.5, 300.0])
    assert imaging.to_uint8(vals).tolist() == [0, 1, 2, 3, 255, 255]


@pytest.mark.parametrize("ext", [".png", ".pgm"])
def test_gray_io_round_trip(tmp_path, ext):
    x = np.random.default_rng(0).integers(0, 256, (9, 13)).astype(float)
    path = tmp_path / f"g{ext}"
    imaging.write_image(path, x)
    back = imaging.read_image(path)
    assert back.shape == (9, 13)
    np.testing.assert_array_equal(back, x)


@pytest.mark.parametrize("ext", [".png", ".ppm"])
def test_rgb_io_round_trip(tmp_path, ext):
    x = np.random.default_rng(1).integers(0, 256, (8, 5, 3)).astype(float)
    path = tmp_path / f"c{ext}"
    imaging.write_image(path, x)
    np.testing.assert_array_equal(imaging.read_image(path), x)


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1))
def test_metrics_stay_finite(seed):
    rng = np.random.default_rng(seed)
    x = rng.random((12, 12)) * 255
    y = rng.random((12, 12)) * 255
    assert math.isfinite(imaging.psnr(x, y))
    assert -1.0 <= imaging.ssim(x, y) <= 1.0
