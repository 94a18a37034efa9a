"""Dense bounded revised simplex for small programs.

Problem form: ``min c x`` s.t. ``row_lo <= A x <= row_hi`` and
``lo <= x <= hi``.  Each row gets a slack ``s = A x`` carrying the row
bounds, so the working system is ``[A  -I] (x, s) = 0`` with bounds on every
column.  Phase 1 starts from a basis of slacks where the initial point
satisfies the row, and artificials elsewhere; the artificials stay in the
tableau for phase 2 with bounds fixed at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

AT_LO, AT_HI, FREE, BASIC = 0, 1, 2, -1
REFACTOR_EVERY = 64
BLAND_AFTER = 1000


@dataclass
class LpResult:
    status: str  # Optimal | Infeasible | Unbounded | IterationLimit
    x: Optional[np.ndarray]
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, M: np.ndarray, cost: np.ndarray, lo: np.ndarray, hi: np.ndarray, tol: float):
        self.M, self.lo, self.hi, self.tol = M, lo, hi, tol
        self.cost = cost
        self.m, self.N = M.shape
        self.state = np.zeros(self.N, dtype=int)
        self.x = np.zeros(self.N)
        self.basis = np.zeros(self.m, dtype=int)
        self.Binv = np.eye(self.m)
        self.iterations = 0
        self.degenerate = 0
        self.bland = False
        self.since_refactor = 0

    def refactor(self) -> None:
        self.Binv = np.linalg.inv(self.M[:, self.basis])
        nonbasic = self.state != BASIC
        rhs = -self.M[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.Binv @ rhs
        self.since_refactor = 0

    def _entering(self, d: np.ndarray) -> tuple[int, int]:
        tol = self.tol
        st = self.state
        up = ((st == AT_LO) | (st == FREE)) & (d < -tol)
        down = ((st == AT_HI) | (st == FREE)) & (d > tol)
        up &= self.hi > self.lo
        down &= self.hi > self.lo
        eligible = np.flatnonzero(up | down)
        if eligible.size == 0:
            return -1, 0
        if self.bland:
            j = int(eligible[0])
        else:
            j = int(eligible[np.argmax(np.abs(d[eligible]))])
        return j, (1 if up[j] else -1)

    def iterate(self, max_iter: int) -> str:
        while True:
            if self.iterations >= max_iter:
                return "IterationLimit"
            y = self.cost[self.basis] @ self.Binv
            d = self.cost - y @ self.M
            d[self.basis] = 0.0
            j, direction = self._entering(d)
            if j < 0:
                return "Optimal"
            alpha = self.Binv @ self.M[:, j] * direction  # basic change per unit step is -alpha
            theta = self.hi[j] - self.lo[j]
            leave, leave_to = -1, AT_LO
            tol = self.tol
            xb = self.x[self.basis]
            lob, hib = self.lo[self.basis], self.hi[self.basis]
            best_pivot = 0.0
            for i in np.flatnonzero(np.abs(alpha) > tol):
                a = alpha[i]
                if a > 0:
                    if not math.isfinite(lob[i]):
                        continue
                    ratio, bound = max(xb[i] - lob[i], 0.0) / a, AT_LO
                else:
                    if not math.isfinite(hib[i]):
                        continue
                    ratio, bound = max(hib[i] - xb[i], 0.0) / -a, AT_HI
                if ratio < theta - tol:
                    theta, leave, leave_to, best_pivot = ratio, int(i), bound, abs(a)
                elif leave >= 0 and abs(ratio - theta) <= tol:
                    if self.basis[i] < self.basis[leave] if self.bland else abs(a) > best_pivot:
                        theta, leave, leave_to, best_pivot = min(ratio, theta), int(i), bound, abs(a)
            if not math.isfinite(theta):
                return "Unbounded"
            self.iterations += 1
            step = theta * direction
            self.x[j] += step
            self.x[self.basis] -= theta * alpha
            if leave < 0:
                # bound flip of the entering column
                self.state[j] = AT_HI if direction > 0 else AT_LO
                self.x[j] = self.hi[j] if direction > 0 else self.lo[j]
                continue
            if theta <= tol:
                self.degenerate += 1
                if self.degenerate >= BLAND_AFTER:
                    self.bland = True
            out = self.basis[leave]
            self.state[out] = leave_to
            self.x[out] = self.lo[out] if leave_to == AT_LO else self.hi[out]
            self.state[j] = BASIC
            self.basis[leave] = j
            # rank-one update of the inverse
            col = self.Binv @ self.M[:, j]
            pivot = col[leave]
            row = self.Binv[leave] / pivot
            self.Binv -= np.outer(col, row)
            self.Binv[leave] = row
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()


def solve_lp_arrays(c: np.ndarray, A: np.ndarray, row_lo: np.ndarray, row_hi: np.ndarray,
                    lo: np.ndarray, hi: np.ndarray, tol: float = 1e-9, max_iter: int = 50_000) -> LpResult:
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    x0 = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    if np.any(lo > hi + tol) or np.any(row_lo > row_hi + tol):
        return LpResult("Infeasible", None, math.inf, 0)
    if m == 0:
        # separable: every column sits at its cheaper bound
        x = x0.copy()
        for j in range(n):
            if c[j] < 0:
                x[j] = hi[j]
            elif c[j] > 0:
                x[j] = lo[j]
            if not math.isfinite(x[j]):
                return LpResult("Unbounded", None, -math.inf, 0)
        return LpResult("Optimal", x, float(c @ x), 0)

    activity = A @ x0
    slack_ok = (activity >= row_lo - tol) & (activity <= row_hi + tol)
    s0 = np.where(slack_ok, activity, np.where(activity < row_lo, row_lo, row_hi))
    gap = activity - s0
    # columns: x (n) | slack (m) | artificial (m); row i reads A x - s - sign_i a = 0
    signs = np.where(gap >= 0, 1.0, -1.0)
    M = np.hstack([A, -np.eye(m), -np.diag(signs)])
    art0 = np.abs(gap)
    lo_all = np.concatenate([lo, row_lo, np.zeros(m)])
    hi_all = np.concatenate([hi, row_hi, np.where(slack_ok, 0.0, np.inf)])
    tab = _Tableau(M, np.concatenate([np.zeros(n + m), np.where(slack_ok, 0.0, 1.0)]), lo_all, hi_all, tol)
    tab.x = np.concatenate([x0, s0, art0])
    for j in range(n):
        tab.state[j] = AT_LO if math.isfinite(lo[j]) else (AT_HI if math.isfinite(hi[j]) else FREE)
    for i in range(m):
        sj = n + i
        aj = n + m + i
        if slack_ok[i]:
            tab.basis[i] = sj
            tab.state[sj] = BASIC
            tab.state[aj] = AT_LO
        else:
            tab.basis[i] = aj
            tab.state[aj] = BASIC
            tab.state[sj] = AT_LO if s0[i] == row_lo[i] else AT_HI
    tab.refactor()

    if not slack_ok.all():
        status = tab.iterate(max_iter)
        if status == "IterationLimit":
            return LpResult(status, None, math.inf, tab.iterations)
        infeas = float(np.sum(tab.x[n + m:]))
        scale = max(1.0, float(np.max(np.abs(row_lo[np.isfinite(row_lo)]), initial=0.0)),
                    float(np.max(np.abs(row_hi[np.isfinite(row_hi)]), initial=0.0)))
        if infeas > 1e-7 * scale:
            return LpResult("Infeasible", None, math.inf, tab.iterations)
        tab.hi[n + m:] = 0.0
        tab.x[n + m:] = np.minimum(tab.x[n + m:], 0.0)
        for i in range(m):
            aj = n + m + i
            if tab.state[aj] != BASIC:
                tab.state[aj] = AT_LO
        tab.refactor()

    tab.cost = np.concatenate([c, np.zeros(2 * m)])
    tab.degenerate, tab.bland = 0, False
    status = tab.iterate(max_iter)
    if status != "Optimal":
        return LpResult(status, None, -math.inf if status == "Unbounded" else math.inf, tab.iterations)
    tab.refactor()
    x = tab.x[:n].copy()
    x = np.minimum(np.maximum(x, lo), hi)
    return LpResult("Optimal", x, float(c @ x), tab.iterations)
