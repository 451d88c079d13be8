"""ADMM solver for TV-TV minimization.

Solves::

    minimize  ||x||_TV + beta ||x - w||_TV   subject to  A x = b

by introducing ``z = D x`` and splitting between the separable l1-l1 term in
``z`` and the indicator of ``{(z, x) : A x = b, D x = z}``. Each iteration is
one closed-form prox, one exact projection and a scaled dual update.
"""
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .operators import DiffOperator, DownsampleOperator
from .prox import AffineProjector, L1L1Prox

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TvTvProblem:
    """One TV-TV instance on an ``(M, N)`` HR grid.

    ``b`` and ``w`` are column-major vectors of the LR observation and of the
    side-information image.
    """

    b: np.ndarray
    w: np.ndarray
    shape: tuple
    scale: int
    kernel: str = "bicubic"
    phase: int = 0
    beta: float = 1.0

    def __post_init__(self):
        M, N = self.shape
        s = int(self.scale)
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if M % s or N % s:
            raise DimensionError(f"grid {M}x{N} not divisible by scale {s}")
        b = np.asarray(self.b, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if w.size != M * N:
            raise DimensionError(f"w has {w.size} entries, grid needs {M * N}")
        if b.size != (M // s) * (N // s):
            raise DimensionError(f"b has {b.size} entries, LR grid needs {(M // s) * (N // s)}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "shape", (M, N))
        object.__setattr__(self, "scale", s)

    @property
    def n(self):
        return self.shape[0] * self.shape[1]

    def downsampler(self):
        return DownsampleOperator(self.shape, self.scale, self.kernel, self.phase)

    def diff(self, backend="direct"):
        return DiffOperator(self.shape, backend)


@dataclass
class SolverOptions:
    rho: float = 1.0
    adaptive_rho: bool = True
    adapt_interval: int = 10
    balance_ratio: float = 10.0
    relax: float = 1.0
    tol_abs: float = 1e-7
    tol_rel: float = 1e-5
    max_iter: int = 10000
    cg_rtol: float = 1e-10
    cg_max_iter: int = 500
    schur: str = "fft"
    diff_backend: str = "direct"

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.max_iter < 1 or self.cg_max_iter < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.tol_abs < 0 or self.tol_rel < 0:
            raise ValueError("tolerances must be >= 0")
        if self.schur not in ("fft", "cg"):
            raise ValueError(f"unknown Schur solver {self.schur!r}")
        if self.diff_backend not in ("direct", "fft"):
            raise ValueError(f"unknown difference backend {self.diff_backend!r}")


@dataclass
class AdmmState:
    z: np.ndarray
    x: np.ndarray
    z_dup: np.ndarray
    x_dup: np.ndarray
    lam_z: np.ndarray
    lam_x: np.ndarray
    rho: float
    z_dup_prev: np.ndarray = None
    x_dup_prev: np.ndarray = None
    k: int = 0
    r_primal: float = 0.0
    r_dual: float = 0.0


@dataclass
class SolveReport:
    iterations: int
    r_primal: float
    r_dual: float
    objective: float
    feas_inf: float
    seconds: float
    converged: bool
    rho: float
    cg_iterations: int = 0
    history: list = field(default_factory=list, repr=False)


def objective(problem, x):
    """``||x||_TV + beta ||x - w||_TV``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise DimensionError(f"x has shape {x.shape}, expected ({problem.n},)")
    D = problem.diff()
    return D.tv_norm(x) + problem.beta * D.tv_norm(x - problem.w)


def residuals(state):
    """Primal residual ``||u - v||`` and dual residual ``rho ||v_k - v_{k-1}||``."""
    pz = state.z - state.z_dup
    px = state.x - state.x_dup
    r_p = math.sqrt(pz @ pz + px @ px)
    if state.z_dup_prev is None:
        return r_p, 0.0
    dz = state.z_dup - state.z_dup_prev
    dx = state.x_dup - state.x_dup_prev
    return r_p, state.rho * math.sqrt(dz @ dz + dx @ dx)


def solve_tvtv(problem, options=None, record_history=False, callback=None):
    """Run ADMM from the warm start ``(z, x) = (D w, w)``.

    Returns ``(x_hat, report)``. ``x_hat`` is always the projected iterate,
    so ``A x_hat = b`` holds to the projection tolerance even when the
    iteration cap is hit; in that case the best feasible iterate seen is
    returned and ``report.converged`` is False. ``callback(state)``, if
    given, is called after every iteration.
    """
    opts = options or SolverOptions()
    t0 = time.perf_counter()
    A = problem.downsampler()
    D = problem.diff(opts.diff_backend)
    proj = AffineProjector(A, D, problem.b, cg_rtol=opts.cg_rtol,
                          cg_max_iter=opts.cg_max_iter, schur=opts.schur)
    w = problem.w
    w_bar = D.forward(w)
    prox = L1L1Prox(w_bar, problem.beta)
    beta = problem.beta
    n = problem.n
    sqrt3n = math.sqrt(3 * n)

    st = AdmmState(z=w_bar.copy(), x=w.copy(), z_dup=w_bar.copy(), x_dup=w.copy(),
                   lam_z=np.zeros(2 * n), lam_x=np.zeros(n), rho=float(opts.rho))
    best_obj, best_x = math.inf, None
    history = []
    cg_total = 0
    converged = False
    next_adapt = opts.adapt_interval
    for k in range(1, opts.max_iter + 1):
        st.z_dup_prev, st.x_dup_prev = st.z_dup, st.x_dup
        st.z = prox(st.z_dup - st.lam_z, 1.0 / st.rho)
        st.x = st.x_dup - st.lam_x
        a = opts.relax
        if a != 1.0:
            hz = a * st.z + (1.0 - a) * st.z_dup_prev
            hx = a * st.x + (1.0 - a) * st.x_dup_prev
        else:
            hz, hx = st.z, st.x
        st.z_dup, st.x_dup = proj.project(hz + st.lam_z, hx + st.lam_x)
        cg_total += proj.cg_iterations
        st.lam_z += hz - st.z_dup
        st.lam_x += hx - st.x_dup
        st.k = k
        st.r_primal, st.r_dual = residuals(st)

        obj = float(np.sum(np.abs(st.z_dup)) + beta * np.sum(np.abs(st.z_dup - w_bar)))
        if obj < best_obj:
            best_obj, best_x = obj, st.x_dup
        if record_history:
            history.append((st.r_primal, st.r_dual, obj))
        if callback is not None:
            callback(st)

        u_norm = math.sqrt(st.z @ st.z + st.x @ st.x)
        v_norm = math.sqrt(st.z_dup @ st.z_dup + st.x_dup @ st.x_dup)
        eps_p = opts.tol_abs * sqrt3n + opts.tol_rel * max(u_norm, v_norm)
        lam_norm = math.sqrt(st.lam_z @ st.lam_z + st.lam_x @ st.lam_x)
        eps_d = opts.tol_abs * sqrt3n + opts.tol_rel * st.rho * lam_norm
        if st.r_primal <= eps_p and st.r_dual <= eps_d:
            converged = True
            break

        if opts.adaptive_rho and k == next_adapt:
            next_adapt *= 2
            # balance residuals measured against their own tolerances;
            # scaled duals follow rho inversely
            rel_p = st.r_primal / eps_p
            rel_d = st.r_dual / eps_d
            if rel_p > opts.balance_ratio * rel_d:
                st.rho *= 2.0
                st.lam_z /= 2.0
                st.lam_x /= 2.0
            elif rel_d > opts.balance_ratio * rel_p:
                st.rho /= 2.0
                st.lam_z *= 2.0
                st.lam_x *= 2.0

    if converged:
        x_hat, obj = st.x_dup, float(np.sum(np.abs(st.z_dup)) + beta * np.sum(np.abs(st.z_dup - w_bar)))
    else:
        log.warning("ADMM hit the iteration cap (%d) with r_p=%.3e r_d=%.3e",
                    opts.max_iter, st.r_primal, st.r_dual)
        x_hat, obj = best_x, best_obj
    feas = float(np.max(np.abs(A.forward(x_hat) - problem.b))) if problem.b.size else 0.0
    report = SolveReport(
        iterations=st.k, r_primal=st.r_primal, r_dual=st.r_dual, objective=obj,
        feas_inf=feas, seconds=time.perf_counter() - t0, converged=converged,
        rho=st.rho, cg_iterations=cg_total, history=history,
    )
    return x_hat.copy(), report
