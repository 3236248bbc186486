"""Bounded-variable revised primal simplex with dual extraction.

Constraints ``Ax {<=,=,>=} b`` are carried as ``Ax + s = b`` with sign-
restricted slacks, so every variable (structural or slack) lives in a box.
The basis inverse is never formed: a SuperLU factorization of B is refreshed
periodically and product-form eta vectors bridge the pivots in between
(:mod:`stormuc._kernels` supplies the hot eta loops).

Pricing is Dantzig (largest reduced-cost violation) with a Bland's-rule
fallback after a run of degenerate steps.  Phase 1 minimizes the sum of bound
violations of basic variables with composite piecewise-linear costs.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .._kernels import btran_etas, ftran_etas
from ..model import CompiledModel

INF = float("inf")

AT_LOWER, AT_UPPER, BASIC, FREE = 0, 1, 2, 3

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"


class SolverError(RuntimeError):
    """Numerical failure the safeguards could not recover from."""


class SimplexResult:
    __slots__ = ("status", "x", "slack", "duals", "reduced_costs", "obj",
                 "dual_obj", "iterations")

    def __init__(self, status, x=None, slack=None, duals=None, reduced_costs=None,
                 obj=None, dual_obj=None, iterations=0):
        self.status = status
        self.x = x
        self.slack = slack
        self.duals = duals
        self.reduced_costs = reduced_costs
        self.obj = obj
        self.dual_obj = dual_obj
        self.iterations = iterations


class BoundedSimplex:
    """One-shot primal simplex over a compiled model (integrality ignored)."""

    def __init__(self, model: CompiledModel, *, feas_tol=1e-7, opt_tol=1e-9,
                 pivot_tol=1e-9, refactor_every=64, bland_after=40,
                 max_iterations=None):
        self.n_struct = model.ncols
        self.m = model.nrows
        self.N = self.n_struct + self.m
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.pivot_tol = pivot_tol
        self.refactor_every = refactor_every
        self.bland_after = bland_after
        n, m = self.n_struct, self.m
        self.max_iterations = max_iterations or (200 * (n + m) + 20000)

        self.A_csc = model.A.tocsc()
        self.AT_csr = self.A_csc.T.tocsr()   # for pricing A^T y
        self.b = model.rhs.astype(np.float64)
        self.c = np.concatenate([model.obj.astype(np.float64), np.zeros(m)])
        self.obj_const = model.obj_const

        self.lower = np.concatenate([model.lb, np.where(model.sense == -1, 0.0, -INF)])
        self.upper = np.concatenate([model.ub, np.where(model.sense == 1, 0.0, INF)])
        eq = model.sense == 0
        self.lower[n:][eq] = 0.0
        self.upper[n:][eq] = 0.0
        self.sense = model.sense

        self.basis = np.arange(n, n + m, dtype=np.int64)
        self.vstat = np.empty(self.N, dtype=np.int8)
        self.xval = np.zeros(self.N)
        for j in range(n):
            lo, hi = self.lower[j], self.upper[j]
            if lo > -INF:
                self.vstat[j] = AT_LOWER
                self.xval[j] = lo
            elif hi < INF:
                self.vstat[j] = AT_UPPER
                self.xval[j] = hi
            else:
                self.vstat[j] = FREE
                self.xval[j] = 0.0
        self.vstat[n:] = BASIC

        self.lu = None
        self.eta_W = np.empty((refactor_every, m))
        self.eta_rows = np.empty(refactor_every, dtype=np.int64)
        self.eta_count = 0
        self.iterations = 0
        self._wbuf = np.zeros(m)
        self._refactorize()

    # -- linear algebra ----------------------------------------------------

    def _basis_matrix(self) -> sp.csc_matrix:
        n, m = self.n_struct, self.m
        cols_i, cols_j, vals = [], [], []
        indptr, indices, data = self.A_csc.indptr, self.A_csc.indices, self.A_csc.data
        for pos, j in enumerate(self.basis):
            if j < n:
                s, e = indptr[j], indptr[j + 1]
                cols_i.append(indices[s:e])
                cols_j.append(np.full(e - s, pos, dtype=np.int64))
                vals.append(data[s:e])
            else:
                cols_i.append(np.array([j - n], dtype=np.int64))
                cols_j.append(np.array([pos], dtype=np.int64))
                vals.append(np.array([1.0]))
        i = np.concatenate(cols_i)
        jj = np.concatenate(cols_j)
        v = np.concatenate(vals)
        return sp.csc_matrix((v, (i, jj)), shape=(m, m))

    def _refactorize(self):
        try:
            self.lu = splu(self._basis_matrix())
        except RuntimeError as exc:  # singular basis
            raise SolverError(f"singular basis during refactorization: {exc}") from exc
        self.eta_count = 0
        self._recompute_basics()

    def _recompute_basics(self):
        """xB = B^-1 (b - sum of nonbasic columns at their values)."""
        n = self.n_struct
        rhs = self.b.copy()
        xs = self.xval[:n].copy()
        xs[self.vstat[:n] == BASIC] = 0.0
        rhs -= self.A_csc @ xs
        slack_vals = self.xval[n:].copy()
        slack_vals[self.vstat[n:] == BASIC] = 0.0
        rhs -= slack_vals
        xb = self.lu.solve(rhs)
        if self.eta_count:
            ftran_etas(self.eta_W, self.eta_rows, self.eta_count, xb)
        self.xval[self.basis] = xb

    def _ftran(self, col: np.ndarray) -> np.ndarray:
        v = self.lu.solve(col)
        if self.eta_count:
            ftran_etas(self.eta_W, self.eta_rows, self.eta_count, v)
        return v

    def _btran(self, c_b: np.ndarray) -> np.ndarray:
        v = c_b.copy()
        if self.eta_count:
            btran_etas(self.eta_W, self.eta_rows, self.eta_count, v)
        return self.lu.solve(v, trans="T")

    def _column(self, j: int) -> np.ndarray:
        self._wbuf[:] = 0.0
        n = self.n_struct
        if j < n:
            s, e = self.A_csc.indptr[j], self.A_csc.indptr[j + 1]
            self._wbuf[self.A_csc.indices[s:e]] = self.A_csc.data[s:e]
        else:
            self._wbuf[j - n] = 1.0
        return self._wbuf

    def _reduced_costs(self, y: np.ndarray, costs: np.ndarray) -> np.ndarray:
        z = np.empty(self.N)
        z[:self.n_struct] = costs[:self.n_struct] - self.AT_csr @ y
        z[self.n_struct:] = costs[self.n_struct:] - y
        return z

    # -- pricing -----------------------------------------------------------

    def _choose_entering(self, z: np.ndarray, bland: bool):
        tol = self.opt_tol
        fixed = self.lower == self.upper
        can_up = (self.vstat == AT_LOWER) | (self.vstat == FREE)
        can_dn = (self.vstat == AT_UPPER) | (self.vstat == FREE)
        viol = np.zeros(self.N)
        up_mask = can_up & ~fixed & (z < -tol)
        dn_mask = can_dn & ~fixed & (z > tol)
        viol[up_mask] = -z[up_mask]
        viol[dn_mask] = np.maximum(viol[dn_mask], z[dn_mask])
        cand = np.flatnonzero(viol > 0.0)
        if cand.size == 0:
            return -1, 0
        if bland:
            q = int(cand[0])
        else:
            q = int(cand[np.argmax(viol[cand])])
        direction = 1 if (self.vstat[q] == AT_LOWER or
                          (self.vstat[q] == FREE and z[q] < 0)) else -1
        return q, direction

    # -- ratio test ----------------------------------------------------------

    def _ratio_test(self, q: int, direction: int, w: np.ndarray, phase1_d: np.ndarray | None):
        """Return (step, blocking_pos, kind) with kind 'flip'|'row'|'none'."""
        lo, hi = self.lower, self.upper
        basis = self.basis
        xb = self.xval[basis]
        rho = -direction * w
        piv_ok = np.abs(w) > self.pivot_tol

        theta = np.full(self.m, INF)
        up = piv_ok & (rho > 0)
        dn = piv_ok & (rho < 0)
        ub_b = hi[basis]
        lb_b = lo[basis]
        if phase1_d is None:
            with np.errstate(invalid="ignore"):
                theta[up] = np.where(ub_b[up] < INF, (ub_b[up] - xb[up]) / rho[up], INF)
                theta[dn] = np.where(lb_b[dn] > -INF, (xb[dn] - lb_b[dn]) / (-rho[dn]), INF)
        else:
            d = phase1_d
            feas = d == 0
            with np.errstate(invalid="ignore"):
                m_up = up & feas
                theta[m_up] = np.where(ub_b[m_up] < INF, (ub_b[m_up] - xb[m_up]) / rho[m_up], INF)
                m_dn = dn & feas
                theta[m_dn] = np.where(lb_b[m_dn] > -INF, (xb[m_dn] - lb_b[m_dn]) / (-rho[m_dn]), INF)
                m_hi = dn & (d > 0)          # above upper, moving down: stop at upper
                theta[m_hi] = (xb[m_hi] - ub_b[m_hi]) / (-rho[m_hi])
                m_lo = up & (d < 0)          # below lower, moving up: stop at lower
                theta[m_lo] = (lb_b[m_lo] - xb[m_lo]) / rho[m_lo]
        np.maximum(theta, 0.0, out=theta)

        flip_cap = INF
        if self.vstat[q] in (AT_LOWER, AT_UPPER):
            span = hi[q] - lo[q]
            if span < INF:
                flip_cap = span

        row_min = theta.min() if self.m else INF
        if row_min == INF and flip_cap == INF:
            return INF, -1, "none"
        if flip_cap <= row_min:
            return flip_cap, -1, "flip"
        ties = np.flatnonzero(theta <= row_min + 1e-12)
        r = int(ties[np.argmin(basis[ties])])
        return float(theta[r]), r, "row"

    # -- pivoting ------------------------------------------------------------

    def _pivot(self, q, direction, w, step, r, kind):
        basis = self.basis
        if step != 0.0:
            self.xval[basis] -= step * direction * w
        start = self.xval[q]
        new_q = start + direction * step
        if kind == "flip":
            self.xval[q] = new_q
            self.vstat[q] = AT_UPPER if direction > 0 else AT_LOWER
            return
        leave = basis[r]
        lo_l, hi_l = self.lower[leave], self.upper[leave]
        xl = self.xval[leave]
        # land the leaving variable exactly on the nearer violated/blocking bound
        if hi_l < INF and abs(xl - hi_l) <= abs(xl - lo_l):
            self.xval[leave] = hi_l
            self.vstat[leave] = AT_UPPER if hi_l > lo_l else AT_LOWER
        else:
            self.xval[leave] = lo_l
            self.vstat[leave] = AT_LOWER
        basis[r] = q
        self.vstat[q] = BASIC
        self.xval[q] = new_q
        if self.eta_count >= self.refactor_every:
            self._refactorize()
        else:
            self.eta_W[self.eta_count] = w
            self.eta_rows[self.eta_count] = r
            self.eta_count += 1
            if self.eta_count >= self.refactor_every:
                self._refactorize()

    # -- phases ----------------------------------------------------------------

    def _phase1_costs(self):
        xb = self.xval[self.basis]
        d = np.zeros(self.m)
        tol = self.feas_tol
        d[xb > self.upper[self.basis] + tol] = 1.0
        d[xb < self.lower[self.basis] - tol] = -1.0
        return d

    def _infeasibility(self):
        xb = self.xval[self.basis]
        return float(np.maximum(xb - self.upper[self.basis], 0.0).sum()
                     + np.maximum(self.lower[self.basis] - xb, 0.0).sum())

    def _run_phase(self, phase: int):
        degen_run = 0
        while True:
            if self.iterations >= self.max_iterations:
                raise SolverError(f"iteration limit {self.max_iterations} exceeded")
            if phase == 1:
                d = self._phase1_costs()
                if not d.any():
                    return STATUS_OPTIMAL
                cb = np.zeros(self.m)
                cb[:] = d
                costs = np.zeros(self.N)
            else:
                d = None
                costs = self.c
                cb = costs[self.basis]
            y = self._btran(cb)
            z = self._reduced_costs(y, costs)
            z[self.basis] = 0.0
            bland = degen_run >= self.bland_after
            q, direction = self._choose_entering(z, bland)
            if q < 0:
                if phase == 1:
                    scale = 1.0 + float(np.abs(self.b).max()) if self.m else 1.0
                    return (STATUS_OPTIMAL if self._infeasibility() <= self.feas_tol * scale
                            else STATUS_INFEASIBLE)
                return STATUS_OPTIMAL
            w = self._ftran(self._column(q).copy())
            step, r, kind = self._ratio_test(q, direction, w, d)
            if kind == "none":
                if phase == 1:
                    raise SolverError("phase-1 direction unblocked; numerical trouble")
                return STATUS_UNBOUNDED
            self.iterations += 1
            degen_run = degen_run + 1 if step <= 1e-11 else 0
            self._pivot(q, direction, w, step, r, kind)
            if phase == 1 and self._infeasibility() <= 0.0:
                return STATUS_OPTIMAL

    # -- driver ------------------------------------------------------------------

    def solve(self) -> SimplexResult:
        if self.m == 0:
            return self._solve_boxed()
        status = self._run_phase(1)
        if status == STATUS_INFEASIBLE:
            return SimplexResult(STATUS_INFEASIBLE, iterations=self.iterations)
        status = self._run_phase(2)
        if status == STATUS_UNBOUNDED:
            return SimplexResult(STATUS_UNBOUNDED, iterations=self.iterations)
        # polish: fresh factorization, then re-run both phases (usually 0 pivots)
        self._refactorize()
        if self._infeasibility() > self.feas_tol:
            status = self._run_phase(1)
            if status == STATUS_INFEASIBLE:
                raise SolverError("feasibility lost after refactorization")
        status = self._run_phase(2)
        if status == STATUS_UNBOUNDED:
            return SimplexResult(STATUS_UNBOUNDED, iterations=self.iterations)
        return self._extract()

    def _solve_boxed(self) -> SimplexResult:
        x = np.empty(self.n_struct)
        for j in range(self.n_struct):
            cj = self.c[j]
            lo, hi = self.lower[j], self.upper[j]
            if cj > 0:
                if lo == -INF:
                    return SimplexResult(STATUS_UNBOUNDED, iterations=0)
                x[j] = lo
            elif cj < 0:
                if hi == INF:
                    return SimplexResult(STATUS_UNBOUNDED, iterations=0)
                x[j] = hi
            else:
                x[j] = lo if lo > -INF else (hi if hi < INF else 0.0)
        obj = float(self.c[:self.n_struct] @ x) + self.obj_const
        return SimplexResult(STATUS_OPTIMAL, x=x, slack=np.zeros(0), duals=np.zeros(0),
                             reduced_costs=None, obj=obj, dual_obj=obj, iterations=0)

    def _extract(self) -> SimplexResult:
        n = self.n_struct
        self._recompute_basics()
        x = self.xval[:n].copy()
        slack_raw = self.xval[n:].copy()
        y = self._btran(self.c[self.basis])
        z = self._reduced_costs(y, self.c)
        z[self.basis] = 0.0
        # sense-signed nonnegative multipliers: '<=' rows flip the raw y
        duals = np.where(self.sense == -1, -y, y)
        obj = float(self.c[:n] @ x) + self.obj_const
        # dual objective: y^T b plus reduced-cost-weighted bound values of
        # nonbasic variables (nonbasic slacks sit at zero and drop out)
        nonbasic = self.vstat != BASIC
        bound_part = float((z[nonbasic] * self.xval[nonbasic]).sum())
        dual_obj = float(y @ self.b) + bound_part + self.obj_const
        return SimplexResult(STATUS_OPTIMAL, x=x, slack=slack_raw, duals=duals,
                             reduced_costs=z[:n], obj=obj, dual_obj=dual_obj,
                             iterations=self.iterations)
