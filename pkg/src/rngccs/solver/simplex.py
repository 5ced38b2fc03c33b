"""Bounded-variable revised simplex.

Problem form::

    maximize    c @ x
    subject to  A[i] @ x  (<= | >= | =)  b[i]
                lb <= x <= ub          (infinite bounds allowed)

Every row gets a slack column so the working matrix is ``[A | I]`` with
``A x + s = b``; the row sense becomes a bound on the slack. Phase 1 minimizes
the sum of bound infeasibilities of the basic variables, so it can start from
the all-slack basis or from any warm-start basis (e.g. the parent node's basis
in branch-and-bound after a bound change). The basis inverse is kept explicitly
with product-form updates and periodic reinversion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalStall

LE, GE, EQ = "<=", ">=", "="

AT_LOWER, AT_UPPER, AT_ZERO, BASIC = 0, 1, 2, -1


@dataclass
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.b = np.asarray(self.b, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(self.b.shape[0], n)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.senses = list(self.senses)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class Basis:
    basic: np.ndarray  # column indices in [A | I], one per row
    status: np.ndarray  # per column: BASIC or nonbasic position


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    reduced_costs: np.ndarray | None
    dual_objective: float
    basis: Basis | None
    iterations: int


def _scale(A: np.ndarray, passes: int = 6):
    """Geometric-mean row/column scaling; returns (row_scale, col_scale)."""
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    if A.size == 0:
        return r, s
    absA = np.abs(A)
    mask = absA > 0
    for _ in range(passes):
        S = absA * r[:, None] * s[None, :]
        big = np.where(mask, S, 0.0).max(axis=1)
        small = np.where(mask, S, np.inf).min(axis=1)
        ok = big > 0
        r[ok] /= np.sqrt(big[ok] * small[ok])
        S = absA * r[:, None] * s[None, :]
        big = np.where(mask, S, 0.0).max(axis=0)
        small = np.where(mask, S, np.inf).min(axis=0)
        ok = big > 0
        s[ok] /= np.sqrt(big[ok] * small[ok])
    # powers of two keep the scaling exact in floating point
    r = np.exp2(np.round(np.log2(r)))
    s = np.exp2(np.round(np.log2(s)))
    return r, s


class _Simplex:
    def __init__(self, lp: LinearProgram, feas_tol: float, opt_tol: float,
                 max_iter: int | None, refactor_every: int = 64, bland_after: int = 40):
        m, n = lp.shape
        self.m, self.n = m, n
        self.rs, self.cs = _scale(lp.A)
        A = lp.A * self.rs[:, None] * self.cs[None, :]
        self.M = np.hstack([A, np.eye(m)])
        self.b = lp.b * self.rs
        cost = np.concatenate([lp.c * self.cs, np.zeros(m)])
        self.cost_scale = float(np.max(np.abs(cost))) if cost.size and np.any(cost) else 1.0
        self.cost = cost / self.cost_scale
        slack_lo = np.array([0.0 if s in (LE, EQ) else -np.inf for s in lp.senses])
        slack_hi = np.array([np.inf if s == LE else 0.0 for s in lp.senses])
        with np.errstate(invalid="ignore"):
            self.L = np.concatenate([lp.lb / self.cs, slack_lo])
            self.U = np.concatenate([lp.ub / self.cs, slack_hi])
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.pivot_tol = 1e-9
        self.max_iter = max_iter or 50 * (m + n) + 1000
        self.refactor_every = refactor_every
        self.bland_after = bland_after
        self.iterations = 0

    # -- basis bookkeeping -------------------------------------------------
    def _nonbasic_value(self, j: int, st: int) -> float:
        if st == AT_LOWER:
            return self.L[j]
        if st == AT_UPPER:
            return self.U[j]
        return 0.0

    def _default_status(self, j: int) -> int:
        if np.isfinite(self.L[j]):
            return AT_LOWER
        if np.isfinite(self.U[j]):
            return AT_UPPER
        return AT_ZERO

    def start(self, hint: Basis | None):
        m, n = self.m, self.n
        N = n + m
        status = np.array([self._default_status(j) for j in range(N)], dtype=int)
        if hint is not None and len(hint.basic) == m and len(hint.status) == N:
            basic = np.array(hint.basic, dtype=int)
            status = np.array(hint.status, dtype=int)
            for j in range(N):
                st = status[j]
                if st == BASIC:
                    continue
                if (st == AT_LOWER and not np.isfinite(self.L[j])) or \
                        (st == AT_UPPER and not np.isfinite(self.U[j])) or \
                        (st == AT_ZERO and (np.isfinite(self.L[j]) or np.isfinite(self.U[j]))):
                    status[j] = self._default_status(j)
            status[basic] = BASIC
            if np.count_nonzero(status == BASIC) != m:
                basic, status = None, None
            else:
                try:
                    cond = np.linalg.cond(self.M[:, basic])
                except np.linalg.LinAlgError:
                    cond = np.inf
                if not np.isfinite(cond) or cond > 1e12:
                    basic, status = None, None
        else:
            basic = None
        if basic is None:
            basic = np.arange(n, n + m)
            status = np.array([self._default_status(j) for j in range(N)], dtype=int)
            status[basic] = BASIC
        self.basic = basic
        self.status = status
        self.refactor()

    def refactor(self):
        B = self.M[:, self.basic]
        try:
            self.Binv = np.linalg.inv(B) if self.m else np.zeros((0, 0))
        except np.linalg.LinAlgError:
            raise NumericalStall("singular basis", self.iterations, np.inf) from None
        self.x = np.zeros(self.n + self.m)
        nb = self.status != BASIC
        idx = np.nonzero(nb)[0]
        self.x[idx] = [self._nonbasic_value(j, self.status[j]) for j in idx]
        rhs = self.b - self.M[:, idx] @ self.x[idx]
        self.x[self.basic] = self.Binv @ rhs
        self.since_refactor = 0

    # -- main loop ---------------------------------------------------------
    def _infeasibility(self):
        xb = self.x[self.basic]
        lo = self.L[self.basic]
        hi = self.U[self.basic]
        below = xb < lo - self.feas_tol
        above = xb > hi + self.feas_tol
        return below, above

    def run(self) -> str:
        degenerate = 0
        bland = False
        m = self.m
        N = self.n + m
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalStall("iteration limit reached", self.iterations,
                                     float(np.linalg.cond(self.M[:, self.basic])) if m else 1.0)
            below, above = self._infeasibility()
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = np.where(below, 1.0, 0.0) - np.where(above, 1.0, 0.0)
                cn = np.zeros(N)
            else:
                cb = self.cost[self.basic]
                cn = self.cost
            y = cb @ self.Binv if m else np.zeros(0)
            d = cn - y @ self.M
            d[self.basic] = 0.0
            st = self.status
            movable = self.U > self.L
            can_up = ((st == AT_LOWER) | (st == AT_ZERO)) & movable & (d > self.opt_tol)
            can_down = ((st == AT_UPPER) | (st == AT_ZERO)) & movable & (d < -self.opt_tol)
            eligible = np.nonzero(can_up | can_down)[0]
            if eligible.size == 0:
                if self.since_refactor:
                    self.refactor()
                    b2, a2 = self._infeasibility()
                    if bool(b2.any() or a2.any()) != phase1:
                        continue
                return "infeasible" if phase1 else "optimal"
            if bland:
                q = int(eligible[0])
            else:
                q = int(eligible[np.argmax(np.abs(d[eligible]))])
            dirn = 1.0 if d[q] > 0 else -1.0
            alpha = self.Binv @ self.M[:, q]
            delta = -dirn * alpha  # rate of change of x_B per unit step

            xb = self.x[self.basic]
            lo = self.L[self.basic]
            hi = self.U[self.basic]
            theta = self.U[q] - self.L[q]  # bound flip
            leave = -1
            leave_to = None
            best_piv = 0.0
            for i in np.nonzero(np.abs(delta) > self.pivot_tol)[0]:
                di = delta[i]
                if di < 0:
                    if xb[i] > hi[i] + self.feas_tol:
                        lim, bound = (xb[i] - hi[i]) / -di, AT_UPPER
                    elif xb[i] >= lo[i] - self.feas_tol and np.isfinite(lo[i]):
                        lim, bound = max(xb[i] - lo[i], 0.0) / -di, AT_LOWER
                    else:
                        continue
                else:
                    if xb[i] < lo[i] - self.feas_tol:
                        lim, bound = (lo[i] - xb[i]) / di, AT_LOWER
                    elif xb[i] <= hi[i] + self.feas_tol and np.isfinite(hi[i]):
                        lim, bound = max(hi[i] - xb[i], 0.0) / di, AT_UPPER
                    else:
                        continue
                piv = abs(di)
                if lim < theta - 1e-12 or (lim <= theta + 1e-12 and leave >= 0 and (
                        (bland and self.basic[i] < self.basic[leave]) or
                        (not bland and piv > best_piv))):
                    theta, leave, leave_to, best_piv = lim, int(i), bound, piv
            if not np.isfinite(theta):
                if phase1:
                    raise NumericalStall("phase 1 ray", self.iterations,
                                         float(np.linalg.cond(self.M[:, self.basic])))
                return "unbounded"

            self.iterations += 1
            step = dirn * theta
            self.x[q] += step
            if m:
                self.x[self.basic] += theta * delta
            if leave < 0:
                self.status[q] = AT_UPPER if dirn > 0 else AT_LOWER
                if not np.isfinite(self.L[q]) and not np.isfinite(self.U[q]):
                    self.status[q] = AT_ZERO
            else:
                out = int(self.basic[leave])
                self.x[out] = self.L[out] if leave_to == AT_LOWER else self.U[out]
                self.status[out] = leave_to
                self.status[q] = BASIC
                self.basic[leave] = q
                piv = alpha[leave]
                row = self.Binv[leave] / piv
                self.Binv -= np.outer(alpha, row)
                self.Binv[leave] = row
                self.since_refactor += 1
                if self.since_refactor >= self.refactor_every:
                    self.refactor()
            if theta <= 1e-12:
                degenerate += 1
                if degenerate > self.bland_after:
                    bland = True
            else:
                degenerate = 0
                bland = False


def solve_lp(lp: LinearProgram, basis_hint: Basis | None = None, *, feas_tol: float = 1e-7,
             opt_tol: float = 1e-9, max_iter: int | None = None) -> LPResult:
    """Solve ``lp``; duals certify optimality (see module docstring for the form)."""
    m, n = lp.shape
    if np.any(lp.lb > lp.ub):
        return LPResult("infeasible", None, float("nan"), None, None, float("nan"), None, 0)
    sx = _Simplex(lp, feas_tol, opt_tol, max_iter)
    sx.start(basis_hint)
    status = sx.run()
    basis = Basis(sx.basic.copy(), sx.status.copy())
    if status != "optimal":
        return LPResult(status, None, float("nan") if status == "infeasible" else float("inf"),
                        None, None, float("nan"), basis, sx.iterations)
    x = sx.x[:n] * sx.cs
    # Clean tiny bound violations introduced by scaling round-off.
    x = np.minimum(np.maximum(x, lp.lb), lp.ub)
    cb = sx.cost[sx.basic] * sx.cost_scale
    y_scaled = cb @ sx.Binv if m else np.zeros(0)
    y = y_scaled * sx.rs
    d = lp.c - lp.A.T @ y if m else lp.c.copy()
    objective = float(lp.c @ x)
    return LPResult("optimal", x, objective, y, d, _dual_objective(lp, y, d), basis,
                    sx.iterations)


def _dual_objective(lp: LinearProgram, y: np.ndarray, d: np.ndarray) -> float:
    """Lagrangian dual value b@y + sum_j max over [lb_j, ub_j] of d_j x_j.

    Reduced costs within noise of zero are treated as zero; a sign-infeasible
    reduced cost against an infinite bound yields +inf.
    """
    scale = max(1.0, float(np.max(np.abs(lp.c))) if lp.c.size else 1.0)
    tol = 1e-9 * scale
    total = float(lp.b @ y) if y.size else 0.0
    for dj, lo, hi in zip(d, lp.lb, lp.ub):
        if abs(dj) <= tol:
            continue
        total += dj * (hi if dj > 0 else lo)
    for yi, sense in zip(y, lp.senses):
        # slack column: reduced cost -y_i, slack bounds from the row sense
        ds = -yi
        if abs(ds) <= tol:
            continue
        if sense == EQ:
            continue
        if (sense == LE and ds > 0) or (sense == GE and ds < 0):
            return float("inf")
    return total
