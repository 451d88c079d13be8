"""Proximal step for the l1-l1 term and projection onto {Ax = b, Dx = z}."""
from dataclasses import dataclass

import numpy as np
import scipy.fft as fft

from .errors import DimensionError, SolverFailure
from .operators import FourierDiagonal, spectrum_I_plus_DtD


@dataclass(frozen=True)
class L1L1ProxParams:
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


class L1L1Prox:
    """Prox of ``z -> |z| + beta |z - w_bar|`` with the kinks precomputed.

    The penalty is piecewise linear with kinks at ``0`` and ``w_bar``; its
    prox shifts ``v`` by the slope of the active piece or sticks to a kink.
    With ``lo <= hi`` the kinks, ``c = gamma (1 + beta)`` the outer slope and
    ``d`` the slope between the kinks, that is
    ``clip(v - d, lo, hi) + min(v - lo + c, 0) + max(v - hi - c, 0)``.
    Valid for either sign of ``w_bar`` and any ``beta >= 0``.
    """

    def __init__(self, w_bar, beta):
        if not beta >= 0:
            raise ValueError(f"beta must be >= 0, got {beta}")
        w_bar = np.asarray(w_bar, dtype=float)
        self.beta = float(beta)
        self.lo = np.minimum(w_bar, 0.0)
        self.hi = np.maximum(w_bar, 0.0)
        # between the kinks the slope is (1 - beta) if w_bar > 0, (beta - 1) if w_bar < 0
        self.mid_sign = np.where(w_bar >= 0, 1.0, -1.0)

    def __call__(self, v, gamma):
        v = np.asarray(v, dtype=float)
        if v.shape != self.lo.shape:
            raise DimensionError(f"length mismatch {v.shape} vs {self.lo.shape}")
        c = gamma * (1.0 + self.beta)
        z = np.clip(v - (gamma * (1.0 - self.beta)) * self.mid_sign, self.lo, self.hi)
        z += np.minimum(v - self.lo + c, 0.0)
        z += np.maximum(v - self.hi - c, 0.0)
        return z


def prox_l1l1(v, w_bar, params):
    """Componentwise ``argmin_z 0.5 (z - v)^2 + gamma (|z| + beta |z - w_bar|)``."""
    v = np.asarray(v, dtype=float)
    w_bar = np.asarray(w_bar, dtype=float)
    if v.shape != w_bar.shape:
        raise DimensionError(f"length mismatch {v.shape} vs {w_bar.shape}")
    return L1L1Prox(w_bar, params.beta)(v, params.gamma)


def prox_l1l1_scalar(v, s, params):
    return float(prox_l1l1(np.array([v]), np.array([s]), params)[0])


def conjugate_gradient(apply, rhs, x0=None, tol=1e-10, max_iter=500):
    """Solve ``apply(x) = rhs`` for symmetric positive definite ``apply``.

    Stops when the residual max-norm drops to ``tol``. Returns
    ``(x, residual, iterations)``; raises :class:`SolverFailure` when the
    iteration budget runs out.
    """
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
    r = rhs - apply(x) if x0 is not None else rhs.copy()
    res = np.max(np.abs(r)) if r.size else 0.0
    if res <= tol:
        return x, r, 0
    p = r.copy()
    rr = r @ r
    for k in range(1, max_iter + 1):
        Ap = apply(p)
        alpha = rr / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.max(np.abs(r))
        if res <= tol:
            return x, r, k
        rr_new = r @ r
        p *= rr_new / rr
        p += r
        rr = rr_new
    raise SolverFailure(
        f"conjugate gradients stalled at residual {res:.3e} after {max_iter} iterations",
        residual=float(res), iterations=max_iter,
    )


class AffineProjector:
    """Euclidean projection onto ``{(z, x) : A x = b, D x = z}``.

    With ``r = x_in + D^T z_in`` and ``K = I + D^T D`` (inverted by FFT),
    the multiplier ``mu`` solves the Schur system ``A K^-1 A^T mu = A K^-1 r - b``
    and the projection is ``x = K^-1 (r - A^T mu)``, ``z = D x``.

    Two Schur solvers are available. ``"fft"`` uses the fact that
    ``A K^-1 A^T = S (H K^-1 H^T) S^T`` is circulant on the LR grid and
    inverts it exactly with one FFT pair. ``"cg"`` runs plain conjugate
    gradients on forward/adjoint matvecs, warm-started from the previous
    multiplier. Either way the true residual ``A x - b`` is checked, and the
    "fft" result is polished by CG should roundoff leave it above tolerance.

    Args:
        A (DownsampleOperator): consistency operator.
        D (DiffOperator): difference operator on the same HR grid.
        b (ndarray): LR target, length ``A.m``.
        cg_rtol (float): feasibility tolerance relative to ``max(1, |b|_inf)``.
        cg_max_iter (int): CG budget per projection.
        schur (str): "fft" or "cg".
    """

    def __init__(self, A, D, b, cg_rtol=1e-10, cg_max_iter=500, schur="fft", warm_start=True):
        if A.shape != D.shape:
            raise DimensionError(f"operator grids differ: {A.shape} vs {D.shape}")
        if schur not in ("fft", "cg"):
            raise ValueError(f"unknown Schur solver {schur!r}")
        b = np.asarray(b, dtype=float)
        if b.shape != (A.m,):
            raise DimensionError(f"b has shape {b.shape}, expected ({A.m},)")
        self.A = A
        self.D = D
        self.b = b
        self.K = spectrum_I_plus_DtD(A.shape)
        self.feas_tol = cg_rtol * max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
        self.cg_max_iter = cg_max_iter
        self.schur_method = schur
        self.warm_start = warm_start
        self.mu = np.zeros(A.m)
        self.cg_iterations = 0
        self._schur_diag = schur_spectrum(A, self.K) if schur == "fft" else None

    def schur(self, mu):
        """``A K^-1 A^T mu``."""
        return self.A.forward(self.K.solve(self.A.adjoint(mu)))

    def project(self, z_in, x_in):
        z_in = np.asarray(z_in, dtype=float)
        x_in = np.asarray(x_in, dtype=float)
        if x_in.shape != (self.A.n,) or z_in.shape != (2 * self.A.n,):
            raise DimensionError("projection inputs do not match the grid")
        y = self.K.solve(x_in + self.D.adjoint(z_in))
        rhs = self.A.forward(y) - self.b
        total = 0
        if self._schur_diag is not None:
            mu = self._schur_diag.solve(rhs)
            x = y - self.K.solve(self.A.adjoint(mu))
            if np.max(np.abs(self.A.forward(x) - self.b)) <= self.feas_tol:
                self.mu = mu
                self.cg_iterations = 0
                return self.D.forward(x), x
            mu0 = mu
        else:
            mu0 = self.mu if self.warm_start else None
        for _ in range(3):
            mu, _, its = conjugate_gradient(
                self.schur, rhs, x0=mu0, tol=self.feas_tol, max_iter=self.cg_max_iter)
            total += its
            x = y - self.K.solve(self.A.adjoint(mu))
            # recurrence residual can drift; confirm on the true one
            if np.max(np.abs(self.A.forward(x) - self.b)) <= self.feas_tol:
                break
            mu0 = mu
        else:
            res = float(np.max(np.abs(self.A.forward(x) - self.b)))
            raise SolverFailure(f"projection infeasible after restarts: {res:.3e}",
                                residual=res, iterations=total)
        self.mu = mu
        self.cg_iterations = total
        return self.D.forward(x), x


def schur_spectrum(A, K):
    """LR-grid spectrum of ``A K^-1 A^T`` for a periodic downsampler ``A = S H``.

    ``H K^-1 H^T`` is circulant on the HR grid with impulse response ``c``;
    sampling it on the ``scale`` lattice leaves the circulant with impulse
    response ``c[::s, ::s]`` on the LR grid.
    """
    h = A.filter_spectrum().half
    c = fft.irfft2(np.abs(h) ** 2 / K.half, s=A.shape)
    c_lr = c[:: A.scale, :: A.scale]
    return FourierDiagonal(A.lr_shape, fft.rfft2(c_lr))


def project_affine(projector, z_in, x_in):
    """Functional form of :meth:`AffineProjector.project`."""
    return projector.project(z_in, x_in)
