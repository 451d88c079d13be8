"""Image planes, color conversion, file I/O and quality metrics.

Image planes are plain 2-D ``float64`` arrays of shape ``(M, N)``; color
images are ``(M, N, 3)`` RGB arrays. Vectors are column-major (Fortran
order) flattenings of planes, so pixel ``(i, j)`` sits at index ``j*M + i``.
"""
import math
import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image

from .errors import DimensionError, RangeError

PEAK = 255.0

# BT.601 studio swing, inputs in [0, 255]
_STUDIO = np.array([
    [65.481, 128.553, 24.966],
    [-37.797, -74.203, 112.0],
    [112.0, -93.786, -18.214],
]) / 255.0
_STUDIO_OFFSET = np.array([16.0, 128.0, 128.0])

# BT.601 full swing (JPEG convention)
_FULL = np.array([
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
])
_FULL_OFFSET = np.array([0.0, 128.0, 128.0])


def vectorize(img):
    """Column-major vectorization of a 2-D plane."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise DimensionError(f"expected a 2-D plane, got shape {img.shape}")
    return img.ravel(order="F")


def devectorize(vec, shape):
    """Inverse of :func:`vectorize` for a plane of the given ``(M, N)`` shape."""
    vec = np.asarray(vec, dtype=float)
    M, N = shape
    if vec.ndim != 1 or vec.size != M * N:
        raise DimensionError(f"vector of length {vec.size} does not fit {M}x{N}")
    return vec.reshape((M, N), order="F")


def _conversion(full_swing):
    if full_swing:
        return _FULL, _FULL_OFFSET
    return _STUDIO, _STUDIO_OFFSET


def _check_rgb(rgb):
    rgb = np.asarray(rgb, dtype=float)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DimensionError(f"expected an (M, N, 3) RGB image, got {rgb.shape}")
    if not np.all(np.isfinite(rgb)) or rgb.min() < 0 or rgb.max() > PEAK:
        raise RangeError("RGB values must lie in [0, 255]")
    return rgb


def rgb_to_ycbcr(rgb, full_swing=False):
    """Convert an 8-bit-range RGB image to YCbCr (BT.601).

    The default is the studio-swing convention (Y in [16, 235]) used by the
    usual super-resolution evaluation scripts; ``full_swing=True`` selects
    the JPEG convention instead.
    """
    rgb = _check_rgb(rgb)
    mat, off = _conversion(full_swing)
    return rgb @ mat.T + off


def ycbcr_to_rgb(ycc, full_swing=False):
    """Inverse of :func:`rgb_to_ycbcr`. No clipping is applied."""
    ycc = np.asarray(ycc, dtype=float)
    if ycc.ndim != 3 or ycc.shape[2] != 3:
        raise DimensionError(f"expected an (M, N, 3) image, got {ycc.shape}")
    mat, off = _conversion(full_swing)
    return (ycc - off) @ np.linalg.inv(mat).T


def rgb_to_luminance(rgb, full_swing=False):
    """Luminance (Y) plane of an RGB image."""
    rgb = _check_rgb(rgb)
    mat, off = _conversion(full_swing)
    return rgb @ mat[0] + off[0]


def luminance(img, full_swing=False):
    """Y plane of ``img``; grayscale planes pass through unchanged."""
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        return img
    return rgb_to_luminance(img, full_swing=full_swing)


def psnr(x, y, peak=PEAK):
    """Peak signal-to-noise ratio in dB; ``inf`` when the images coincide."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = np.mean((x - y) ** 2)
    if mse == 0:
        return math.inf
    return float(10.0 * np.log10(peak**2 / mse))


def gaussian_window(size=11, sigma=1.5):
    """Normalized 1-D Gaussian taps; the 2-D window is their outer product."""
    t = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(t**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(img, taps):
    k = taps.size
    out = sliding_window_view(img, k, axis=0) @ taps
    return sliding_window_view(out, k, axis=1) @ taps


def ssim(x, y, peak=PEAK, window=11, sigma=1.5, k1=0.01, k2=0.03):
    """Mean structural similarity over all fully-contained Gaussian windows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    if x.ndim != 2 or min(x.shape) < window:
        raise DimensionError(f"image {x.shape} smaller than {window}x{window} window")
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    g = gaussian_window(window, sigma)
    mx = _filter_valid(x, g)
    my = _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def shave_border(img, pixels):
    """Drop ``pixels`` rows and columns from every side."""
    img = np.asarray(img)
    if pixels < 0 or 2 * pixels >= min(img.shape[:2]):
        raise DimensionError(f"cannot shave {pixels} px from {img.shape[:2]}")
    if pixels == 0:
        return img
    return img[pixels:-pixels, pixels:-pixels]


def center_crop(img, shape):
    """Central ``shape`` block of ``img`` (extra rows/columns split floor/ceil)."""
    img = np.asarray(img)
    M, N = img.shape[:2]
    m, n = shape
    if m > M or n > N:
        raise DimensionError(f"crop {shape} exceeds image {img.shape[:2]}")
    top = (M - m) // 2
    left = (N - n) // 2
    return img[top:top + m, left:left + n]


def crop_to_multiple(img, s):
    """Center-crop so both dimensions are divisible by ``s``."""
    M, N = np.asarray(img).shape[:2]
    return center_crop(img, (M - M % s, N - N % s))


def read_image(path):
    """Read a PNG/PGM/PPM file as ``float64``: (M, N) gray or (M, N, 3) RGB."""
    with Image.open(path) as im:
        if im.mode in ("L", "1", "LA"):
            im = im.convert("L")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        return np.asarray(im, dtype=float)


def to_uint8(img):
    """Clamp to [0, 255] and round half away from zero."""
    img = np.clip(np.asarray(img, dtype=float), 0.0, PEAK)
    return np.floor(img + 0.5).astype(np.uint8)


def write_image(path, img):
    """Write a gray or RGB float image as 8-bit PNG/PGM/PPM (by extension)."""
    data = to_uint8(img)
    ext = os.path.splitext(str(path))[1].lower()
    fmt = {".png": "PNG", ".pgm": "PPM", ".ppm": "PPM", ".pnm": "PPM"}.get(ext)
    if fmt is None:
        raise ValueError(f"unsupported image extension {ext!r}")
    if ext == ".pgm" and data.ndim == 3:
        raise DimensionError("PGM holds grayscale images only")
    Image.fromarray(data).save(path, format=fmt)
