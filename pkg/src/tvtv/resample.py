"""Keys cubic resampling with imresize-style geometry.

Pixel centers sit at half-integer positions, so output pixel ``j`` of a
resize by factor ``k = out/in`` reads input coordinate ``(j + 0.5)/k - 0.5``.
When shrinking, the kernel is stretched by ``1/k`` (anti-aliasing).
"""
import math

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError


def cubic(x, a=-0.5):
    """Keys cubic convolution kernel with support [-2, 2]."""
    x = np.abs(np.asarray(x, dtype=float))
    x2 = x * x
    x3 = x2 * x
    return np.where(
        x <= 1,
        (a + 2) * x3 - (a + 3) * x2 + 1,
        np.where(x < 2, a * x3 - 5 * a * x2 + 8 * a * x - 4 * a, 0.0),
    )


def _map_index(ind, length, boundary):
    if boundary == "periodic":
        return np.mod(ind, length)
    if boundary == "symmetric":
        # half-sample symmetric: ... 1 0 | 0 1 2 ... L-1 | L-1 L-2 ...
        period = np.mod(ind, 2 * length)
        return np.where(period < length, period, 2 * length - 1 - period)
    raise ValueError(f"unknown boundary {boundary!r}")


def resize_matrix(in_len, out_len, boundary="symmetric", antialias=True, a=-0.5):
    """Sparse ``(out_len, in_len)`` matrix of 1-D cubic resize weights.

    Rows are normalized to sum to one. Taps falling outside ``[0, in_len)``
    are folded back according to ``boundary`` ("symmetric" or "periodic").
    """
    if in_len < 1 or out_len < 1:
        raise DimensionError("lengths must be positive")
    k = out_len / in_len
    shrink = antialias and k < 1
    width = 4.0 / k if shrink else 4.0
    ntaps = int(math.ceil(width)) + 2
    j = np.arange(out_len)
    centers = (j + 0.5) / k - 0.5
    left = np.floor(centers - width / 2.0).astype(int)
    ind = left[:, None] + np.arange(ntaps)[None, :]
    dist = centers[:, None] - ind
    w = k * cubic(k * dist, a) if shrink else cubic(dist, a)
    w /= w.sum(axis=1, keepdims=True)
    rows = np.repeat(j, ntaps)
    cols = _map_index(ind, in_len, boundary).ravel()
    mat = sp.coo_matrix((w.ravel(), (rows, cols)), shape=(out_len, in_len))
    mat = mat.tocsr()
    mat.eliminate_zeros()
    return mat


def imresize(plane, shape, boundary="symmetric", antialias=True):
    """Separable bicubic resize of a 2-D plane to ``shape``."""
    plane = np.asarray(plane, dtype=float)
    if plane.ndim != 2:
        raise DimensionError(f"expected a 2-D plane, got {plane.shape}")
    rv = resize_matrix(plane.shape[0], shape[0], boundary, antialias)
    rh = resize_matrix(plane.shape[1], shape[1], boundary, antialias)
    return np.asarray((rh @ (rv @ plane).T).T)


def bicubic_upsample(plane, scale):
    """Bicubic up-scaling by an integer factor (symmetric boundaries)."""
    plane = np.asarray(plane, dtype=float)
    M, N = plane.shape
    return imresize(plane, (M * scale, N * scale), boundary="symmetric")
