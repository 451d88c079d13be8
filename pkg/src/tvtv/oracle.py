"""Dense linear-programming reference for tiny TV-TV instances.

The stacked problem in ``(z, x)``::

    minimize ||z||_1 + beta ||z - D w||_1   s.t.  [0 A; -I D] (z, x) = (b, 0)

becomes an LP by splitting ``z = zp - zm`` and ``z - D w = tp - tm`` with all
split parts nonnegative. It shares no code path with the ADMM solver apart
from the operator definitions.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InstanceTooLarge, SolverFailure

LP_LIMIT = 256


@dataclass
class StackedLp:
    cost: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    bounds: list
    n: int
    m: int
    stacked: np.ndarray      # [0 A; -I D], the constraint matrix in (z, x)
    stacked_rhs: np.ndarray  # (b, 0)


def build_lp(problem):
    """Assemble the dense LP. Variable order: ``zp, zm, tp, tm, x``."""
    n = problem.n
    if n > LP_LIMIT:
        raise InstanceTooLarge(f"LP oracle limited to n <= {LP_LIMIT}, got {n}")
    A = problem.downsampler().dense()
    D = problem.diff().dense()
    m = A.shape[0]
    two_n = 2 * n
    stacked = np.block([[np.zeros((m, two_n)), A], [-np.eye(two_n), D]])
    stacked_rhs = np.concatenate([problem.b, np.zeros(two_n)])

    # z = zp - zm enters through the stacked constraint; link rows tie t to z
    Z = np.hstack([np.eye(two_n), -np.eye(two_n)])
    T = np.hstack([np.eye(two_n), -np.eye(two_n)])
    top = np.hstack([stacked[:, :two_n] @ Z, np.zeros((m + two_n, 2 * two_n)), stacked[:, two_n:]])
    link = np.hstack([Z, -T, np.zeros((two_n, n))])
    a_eq = np.vstack([top, link])
    b_eq = np.concatenate([stacked_rhs, D @ problem.w])
    cost = np.concatenate([np.ones(2 * two_n), np.full(2 * two_n, problem.beta), np.zeros(n)])
    bounds = [(0, None)] * (4 * two_n) + [(None, None)] * n
    return StackedLp(cost, a_eq, b_eq, bounds, n, m, stacked, stacked_rhs)


def solve_lp(lp):
    """Solve with HiGHS at tight tolerances; returns ``(x_opt, value)``."""
    res = linprog(
        lp.cost, A_eq=lp.a_eq, b_eq=lp.b_eq, bounds=lp.bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        raise SolverFailure("LP infeasible: b is not in the range of A")
    if res.status != 0:
        raise SolverFailure(f"LP solve failed: {res.message}")
    x = res.x[-lp.n:]
    return x, float(res.fun)
