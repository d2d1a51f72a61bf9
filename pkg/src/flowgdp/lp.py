"""Two-phase revised simplex with Bland's rule.

Solves ``min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.
Pivoting is fully deterministic: the entering variable is the lowest-index
column with a negative reduced cost, the leaving row is the minimum ratio
with ties broken by the lowest basic-variable index. The basis is
refactorized (LU) at every iteration, so round-off does not accumulate
the way it does in a dense tableau.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import LpFailure

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
MAX_ITERATIONS = "MaxIterations"

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    names: tuple[str, ...] = ()

    @property
    def variables(self) -> dict[str, float]:
        names = self.names or tuple(f"x{k}" for k in range(len(self.x)))
        return {n: float(v) for n, v in zip(names, self.x)}


class _Simplex:
    def __init__(self, A, b, basis, max_iter):
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.iterations = 0
        self.max_iter = max_iter

    def factor(self):
        return linalg.lu_factor(self.A[:, self.basis], check_finite=False)

    def primal(self, lu=None):
        lu = lu or self.factor()
        return linalg.lu_solve(lu, self.b, check_finite=False)

    def run(self, cost, allowed):
        """Bland pivots over columns ``< allowed`` until optimal."""
        A = self.A
        while True:
            if self.iterations >= self.max_iter:
                return MAX_ITERATIONS
            lu = self.factor()
            xB = np.clip(linalg.lu_solve(lu, self.b, check_finite=False), 0.0, None)
            y = linalg.lu_solve(lu, cost[self.basis], trans=1, check_finite=False)
            reduced = cost[:allowed] - A[:, :allowed].T @ y
            scale = max(1.0, float(np.abs(cost[:allowed]).max(initial=0.0)))
            reduced[self.basis_in(allowed)] = 0.0
            cand = np.flatnonzero(reduced < -PIVOT_TOL * scale)
            if cand.size == 0:
                return OPTIMAL
            j = int(cand[0])
            d = linalg.lu_solve(lu, A[:, j], check_finite=False)
            pos = np.flatnonzero(d > PIVOT_TOL * max(1.0, float(np.abs(d).max())))
            if pos.size == 0:
                return UNBOUNDED
            ratios = xB[pos] / d[pos]
            best = ratios.min()
            tied = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            r = int(min(tied, key=lambda k: self.basis[k]))
            self.basis[r] = j
            self.iterations += 1

    def basis_in(self, allowed):
        return [j for j in self.basis if j < allowed]


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *,
             names: Sequence[str] = (), max_iter: int = 50_000) -> LpSolution:
    """Minimise ``c.x`` over non-negative ``x``; see module docstring."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    names = tuple(names)

    # columns: [original n | slacks m_ub | artificials m]
    n_struct = n + m_ub
    A = np.zeros((m, n_struct + m))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:n_struct] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    A[:, n_struct:] = np.eye(m)
    basis = [n + r if (r < m_ub and not neg[r]) else n_struct + r for r in range(m)]
    sx = _Simplex(A, b, basis, max_iter)

    if any(j >= n_struct for j in basis):
        cost1 = np.zeros(n_struct + m)
        cost1[n_struct:] = 1.0
        status = sx.run(cost1, n_struct + m)
        if status == MAX_ITERATIONS:
            return LpSolution(np.full(n, np.nan), np.nan, status, sx.iterations, names)
        xB = sx.primal()
        infeas = sum(v for j, v in zip(sx.basis, xB) if j >= n_struct)
        if infeas > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution(np.full(n, np.nan), np.nan, INFEASIBLE, sx.iterations, names)
        # drive zero-level artificials out of the basis; drop rows that are redundant
        r = 0
        while r < len(sx.basis):
            if sx.basis[r] < n_struct:
                r += 1
                continue
            lu = sx.factor()
            e = np.zeros(len(sx.basis))
            e[r] = 1.0
            row = linalg.lu_solve(lu, e, trans=1, check_finite=False) @ sx.A[:, :n_struct]
            row[sx.basis_in(n_struct)] = 0.0
            big = np.abs(row).max(initial=0.0)
            cand = np.flatnonzero(np.abs(row) > PIVOT_TOL * max(1.0, big)) if big > PIVOT_TOL else []
            if len(cand):
                sx.basis[r] = int(cand[0])
                sx.iterations += 1
                r += 1
            else:
                art = sx.basis[r] - n_struct
                keep = [k for k in range(sx.A.shape[0]) if k != art]
                sx.A = sx.A[keep]
                sx.b = sx.b[keep]
                del sx.basis[r]
                sx.A = np.delete(sx.A, n_struct + art, axis=1)
                sx.basis = [j - 1 if j > n_struct + art else j for j in sx.basis]

    cost2 = np.zeros(sx.A.shape[1])
    cost2[:n] = c
    status = sx.run(cost2, n_struct)
    x_full = np.zeros(sx.A.shape[1])
    x_full[sx.basis] = sx.primal()
    x = np.clip(x_full[:n], 0.0, None)
    if status != OPTIMAL:
        return LpSolution(x, np.nan, status, sx.iterations, names)
    return LpSolution(x, float(c @ x), OPTIMAL, sx.iterations, names)


def require_optimal(sol: LpSolution) -> LpSolution:
    if sol.status != OPTIMAL:
        raise LpFailure(sol.status)
    return sol
