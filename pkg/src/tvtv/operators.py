"""Structured linear operators on column-major image vectors.

All operators act on 1-D vectors produced by :func:`tvtv.imaging.vectorize`
and assume periodic boundaries, so every filtering step is circulant and
diagonalized by the 2-D DFT.
"""
import numpy as np
import scipy.fft as fft
import scipy.sparse as sp

from .errors import DimensionError, InstanceTooLarge
from .resample import cubic

DENSE_LIMIT = 4096
KERNELS = ("bicubic", "box", "direct")


def _as_plane(u, shape):
    u = np.asarray(u, dtype=float)
    M, N = shape
    if u.ndim != 1 or u.size != M * N:
        raise DimensionError(f"expected a vector of length {M * N}, got {u.shape}")
    return u.reshape((M, N), order="F")


def _vec(plane):
    return np.asarray(plane).ravel(order="F")


class LinearOperator:
    """Forward/adjoint pair on flat vectors.

    Subclasses set ``in_size`` and ``out_size`` and implement
    :meth:`forward` and :meth:`adjoint`.
    """

    in_size = 0
    out_size = 0

    def forward(self, u):
        raise NotImplementedError

    def adjoint(self, v):
        raise NotImplementedError

    def dense(self):
        """Materialize the operator column by column (small instances only)."""
        if self.in_size > DENSE_LIMIT:
            raise InstanceTooLarge(f"dense materialization limited to n <= {DENSE_LIMIT}")
        out = np.empty((self.out_size, self.in_size))
        e = np.zeros(self.in_size)
        for k in range(self.in_size):
            e[k] = 1.0
            out[:, k] = self.forward(e)
            e[k] = 0.0
        return out


class FourierDiagonal:
    """Real circulant operator on an ``(M, N)`` grid stored by its DFT spectrum.

    Only the half spectrum matching ``rfft2`` is kept; that is sufficient for
    any real-valued circulant operator.
    """

    def __init__(self, shape, spectrum):
        self.shape = tuple(shape)
        spectrum = np.asarray(spectrum)
        M, N = self.shape
        if spectrum.shape == (M, N):
            spectrum = spectrum[:, : N // 2 + 1]
        if spectrum.shape != (M, N // 2 + 1):
            raise DimensionError(f"spectrum shape {spectrum.shape} does not fit grid {self.shape}")
        self.half = spectrum

    def full(self):
        """Spectrum on the full ``(M, N)`` frequency grid."""
        M, N = self.shape
        full = np.empty((M, N), dtype=np.result_type(self.half, np.complex128))
        full[:, : N // 2 + 1] = self.half
        if N > 1:
            # Hermitian symmetry: lambda(-f1, -f2) = conj(lambda(f1, f2))
            f2 = np.arange(N // 2 + 1, N)
            f1 = (-np.arange(M)) % M
            full[:, f2] = np.conj(self.half[f1][:, N - f2])
        return full

    def _mult(self, u, factor):
        U = _as_plane(u, self.shape)
        out = fft.irfft2(factor * fft.rfft2(U), s=self.shape)
        return _vec(out)

    def apply(self, u):
        return self._mult(u, self.half)

    def apply_adjoint(self, u):
        return self._mult(u, np.conj(self.half))

    def solve(self, r):
        """Apply the inverse operator."""
        return self._mult(r, 1.0 / self.half)

    def is_real(self, tol=1e-12):
        return bool(np.all(np.abs(np.imag(self.half)) <= tol))


class DiffOperator(LinearOperator):
    """Periodic forward differences: n-vector -> 2n-vector.

    The output stacks the vertical differences ``u[i+1, j] - u[i, j]``
    first and the horizontal differences ``u[i, j+1] - u[i, j]`` second,
    each block in column-major order.
    """

    def __init__(self, shape, backend="direct"):
        if backend not in ("direct", "fft"):
            raise ValueError(f"unknown backend {backend!r}")
        self.shape = tuple(shape)
        self.backend = backend
        M, N = self.shape
        self.n = M * N
        self.in_size = self.n
        self.out_size = 2 * self.n
        if backend == "fft":
            f1 = np.arange(M)[:, None]
            f2 = np.arange(N // 2 + 1)[None, :]
            self._tv = np.broadcast_to(np.exp(2j * np.pi * f1 / M) - 1, (M, N // 2 + 1))
            self._th = np.broadcast_to(np.exp(2j * np.pi * f2 / N) - 1, (M, N // 2 + 1))

    def forward(self, u):
        U = _as_plane(u, self.shape)
        if self.backend == "direct":
            dv = np.roll(U, -1, axis=0) - U
            dh = np.roll(U, -1, axis=1) - U
        else:
            Uh = fft.rfft2(U)
            dv = fft.irfft2(self._tv * Uh, s=self.shape)
            dh = fft.irfft2(self._th * Uh, s=self.shape)
        return np.concatenate([_vec(dv), _vec(dh)])

    def adjoint(self, v):
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.size != 2 * self.n:
            raise DimensionError(f"expected a vector of length {2 * self.n}, got {v.shape}")
        P = _as_plane(v[: self.n], self.shape)
        Q = _as_plane(v[self.n:], self.shape)
        if self.backend == "direct":
            out = np.roll(P, 1, axis=0) - P + np.roll(Q, 1, axis=1) - Q
        else:
            out = fft.irfft2(
                np.conj(self._tv) * fft.rfft2(P) + np.conj(self._th) * fft.rfft2(Q),
                s=self.shape,
            )
        return _vec(out)

    def tv_norm(self, u):
        """Anisotropic total variation, the l1 norm of the differences."""
        return float(np.sum(np.abs(self.forward(u))))

    def gram_spectrum(self):
        """Spectrum of ``D^T D`` (the periodic 5-point Laplacian, negated)."""
        return FourierDiagonal(self.shape, spectrum_I_plus_DtD(self.shape).half - 1.0)


def tv_norm(u, shape):
    """Anisotropic TV of a column-major vector on an ``(M, N)`` grid."""
    return DiffOperator(shape).tv_norm(u)


def spectrum_I_plus_DtD(shape):
    """Eigenvalues of ``I + D^T D``: ``1 + 4 sin^2(pi f1/M) + 4 sin^2(pi f2/N)``."""
    M, N = shape
    if M < 1 or N < 1:
        raise DimensionError("grid dimensions must be positive")
    f1 = np.arange(M)[:, None]
    f2 = np.arange(N // 2 + 1)[None, :]
    lam = 1.0 + 4.0 * np.sin(np.pi * f1 / M) ** 2 + 4.0 * np.sin(np.pi * f2 / N) ** 2
    return FourierDiagonal((M, N), lam)


def kernel_taps(kernel, scale):
    """Filter taps ``(offsets, weights)`` relative to the anchor pixel.

    The LR sample ``i`` reads ``sum_d w_d * u[scale*i + phase + d]``. The
    bicubic filter is the Keys kernel stretched by ``scale`` and centered
    ``(scale - 1)/2`` past the anchor, which reproduces imresize geometry.
    """
    s = int(scale)
    if kernel == "direct":
        return np.array([0]), np.array([1.0])
    if kernel == "box":
        return np.arange(s), np.full(s, 1.0 / s)
    if kernel == "bicubic":
        c = (s - 1) / 2.0
        offsets = np.arange(int(np.floor(c - 2 * s)), int(np.ceil(c + 2 * s)) + 1)
        w = cubic((offsets - c) / s) / s
        keep = w != 0
        offsets, w = offsets[keep], w[keep]
        return offsets, w / w.sum()
    raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def _periodic_sampler(length, scale, offsets, weights, phase):
    lr = length // scale
    rows = np.repeat(np.arange(lr), offsets.size)
    cols = np.mod(scale * np.arange(lr)[:, None] + phase + offsets[None, :], length).ravel()
    vals = np.tile(weights, lr)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(lr, length)).tocsr()
    mat.sum_duplicates()
    return mat


class DownsampleOperator(LinearOperator):
    """Periodic filtering followed by subsampling, ``A = S H``.

    Args:
        shape (tuple): HR grid ``(M, N)``; both divisible by ``scale``.
        scale (int): integer factor >= 2.
        kernel (str): "bicubic", "box" or "direct".
        phase (int): offset of the sampling lattice; LR pixel ``(i, j)`` is
            anchored at HR pixel ``(scale*i + phase, scale*j + phase)``.
    """

    def __init__(self, shape, scale, kernel="bicubic", phase=0):
        M, N = shape
        scale = int(scale)
        if scale < 2:
            raise ValueError("scale must be an integer >= 2")
        if M % scale or N % scale:
            raise DimensionError(f"grid {M}x{N} not divisible by scale {scale}")
        if kernel not in KERNELS:
            raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
        self.shape = (M, N)
        self.scale = scale
        self.kernel = kernel
        self.phase = int(phase)
        self.lr_shape = (M // scale, N // scale)
        self.n = M * N
        self.m = self.lr_shape[0] * self.lr_shape[1]
        self.in_size = self.n
        self.out_size = self.m
        self.offsets, self.weights = kernel_taps(kernel, scale)
        self._rv = _periodic_sampler(M, scale, self.offsets, self.weights, self.phase)
        self._rh = _periodic_sampler(N, scale, self.offsets, self.weights, self.phase)
        self._rvT = self._rv.T.tocsr()
        self._rhT = self._rh.T.tocsr()

    def forward(self, u):
        U = _as_plane(u, self.shape)
        if self.kernel == "direct":
            p, s = self.phase, self.scale
            rows = (p + s * np.arange(self.lr_shape[0])) % self.shape[0]
            cols = (p + s * np.arange(self.lr_shape[1])) % self.shape[1]
            return _vec(U[np.ix_(rows, cols)])
        tmp = self._rv @ U
        return _vec((self._rh @ tmp.T).T)

    def adjoint(self, v):
        V = _as_plane(v, self.lr_shape)
        if self.kernel == "direct":
            p, s = self.phase, self.scale
            rows = (p + s * np.arange(self.lr_shape[0])) % self.shape[0]
            cols = (p + s * np.arange(self.lr_shape[1])) % self.shape[1]
            out = np.zeros(self.shape)
            out[np.ix_(rows, cols)] = V
            return _vec(out)
        tmp = self._rvT @ V
        return _vec((self._rhT @ tmp.T).T)

    def filter_spectrum(self):
        """DFT spectrum of the circulant filter ``H`` (before subsampling)."""
        M, N = self.shape
        d = self.offsets + self.phase
        f1 = np.arange(M)[:, None]
        f2 = np.arange(N // 2 + 1)[:, None]
        lv = np.sum(self.weights * np.exp(2j * np.pi * f1 * d / M), axis=1)
        lh = np.sum(self.weights * np.exp(2j * np.pi * f2 * d / N), axis=1)
        return FourierDiagonal(self.shape, lv[:, None] * lh[None, :])

    def select(self, u):
        """Pure subsampling ``S`` at the ``scale*i`` lattice (no filtering, no phase)."""
        U = _as_plane(u, self.shape)
        s = self.scale
        return _vec(U[::s, ::s])
