"""Branch-and-bound on top of the bounded simplex.

Branching picks the most-fractional integer variable (ties by lowest index),
children tighten a single bound, and the search is depth-first with a
best-bound re-sort of the open node list every 100 processed nodes.  Each
node LP is solved cold; no warm starts.
"""

from __future__ import annotations

import time

import numpy as np

from ..model import CompiledModel
from .simplex import (STATUS_INFEASIBLE, STATUS_OPTIMAL, STATUS_UNBOUNDED,
                      BoundedSimplex, SolverError)

INF = float("inf")


class MipResult:
    __slots__ = ("status", "x", "obj", "bound", "nodes", "iterations")

    def __init__(self, status, x=None, obj=None, bound=None, nodes=0, iterations=0):
        self.status = status
        self.x = x
        self.obj = obj
        self.bound = bound
        self.nodes = nodes
        self.iterations = iterations


class _Node:
    __slots__ = ("fixes", "bound")

    def __init__(self, fixes, bound):
        self.fixes = fixes      # tuple of (col, lb, ub), innermost last
        self.bound = bound      # parent LP objective (valid lower bound)


def _lp(model: CompiledModel, lb, ub, simplex_opts):
    patched = CompiledModel(
        ncols=model.ncols, nrows=model.nrows, lb=lb, ub=ub,
        is_int=model.is_int, obj=model.obj, obj_const=model.obj_const,
        A=model.A, sense=model.sense, rhs=model.rhs)
    return BoundedSimplex(patched, **simplex_opts).solve()


def solve_mip_bb(model: CompiledModel, *, integrality_tol=1e-6, mip_rel_gap=1e-6,
                 node_limit=None, time_limit=None, mip_start=None,
                 simplex_opts=None) -> MipResult:
    simplex_opts = simplex_opts or {}
    int_cols = model.int_cols
    t0 = time.monotonic()

    root = _lp(model, model.lb.copy(), model.ub.copy(), simplex_opts)
    if root.status == STATUS_INFEASIBLE:
        return MipResult(STATUS_INFEASIBLE, nodes=1, iterations=root.iterations)
    if root.status == STATUS_UNBOUNDED:
        return MipResult(STATUS_UNBOUNDED, nodes=1, iterations=root.iterations)
    if int_cols.size == 0:
        return MipResult(STATUS_OPTIMAL, x=root.x, obj=root.obj, bound=root.obj,
                         nodes=1, iterations=root.iterations)

    incumbent_x = None
    incumbent_obj = INF
    total_iter = root.iterations

    if mip_start is not None:
        ok, x_fix, obj_fix, it = _probe_start(model, int_cols, mip_start,
                                              integrality_tol, simplex_opts)
        total_iter += it
        if ok:
            incumbent_x, incumbent_obj = x_fix, obj_fix

    open_nodes: list[_Node] = [_Node((), root.obj)]
    processed = 0
    status = STATUS_OPTIMAL
    pruned_bound = INF            # best bound discarded by the gap rule

    while open_nodes:
        if node_limit is not None and processed >= node_limit:
            status = "limit"
            break
        if time_limit is not None and time.monotonic() - t0 > time_limit:
            status = "limit"
            break
        if processed and processed % 100 == 0:
            open_nodes.sort(key=lambda nd: -nd.bound)   # pop() takes best bound
        node = open_nodes.pop()
        processed += 1
        gap_eps = mip_rel_gap * (1.0 + abs(incumbent_obj)) if incumbent_obj < INF else 0.0
        if node.bound >= incumbent_obj - gap_eps and incumbent_obj < INF:
            pruned_bound = min(pruned_bound, node.bound)
            continue
        lb = model.lb.copy()
        ub = model.ub.copy()
        for col, flb, fub in node.fixes:
            lb[col] = max(lb[col], flb)
            ub[col] = min(ub[col], fub)
        res = _lp(model, lb, ub, simplex_opts)
        total_iter += res.iterations
        if res.status != STATUS_OPTIMAL:
            continue
        if incumbent_obj < INF and res.obj >= incumbent_obj - gap_eps:
            pruned_bound = min(pruned_bound, res.obj)
            continue
        xi = res.x[int_cols]
        frac = np.abs(xi - np.round(xi))
        worst = float(frac.max()) if frac.size else 0.0
        if worst <= integrality_tol:
            x = res.x.copy()
            x[int_cols] = np.round(xi)
            if res.obj < incumbent_obj:
                incumbent_obj = res.obj
                incumbent_x = x
            continue
        # most fractional (distance to nearest integer closest to 1/2), lowest index ties
        k = int(np.argmax(frac))
        col = int(int_cols[k])
        val = res.x[col]
        down = _Node(node.fixes + ((col, -INF, np.floor(val)),), res.obj)
        up = _Node(node.fixes + ((col, np.ceil(val), INF),), res.obj)
        open_nodes.append(up)
        open_nodes.append(down)    # LIFO: dive on the floor child first

    if incumbent_x is None:
        if status == "limit":
            return MipResult("limit", nodes=processed, iterations=total_iter)
        return MipResult(STATUS_INFEASIBLE, nodes=processed, iterations=total_iter)
    bound = min([nd.bound for nd in open_nodes], default=INF)
    bound = min(bound, pruned_bound, incumbent_obj)
    return MipResult(status, x=incumbent_x, obj=incumbent_obj, bound=bound,
                     nodes=processed, iterations=total_iter)


def _probe_start(model, int_cols, mip_start, integrality_tol, simplex_opts):
    """Fix integer columns at a suggested point and solve the continuous rest."""
    start = np.asarray(mip_start, dtype=np.float64)
    vals = np.round(start[int_cols])
    lb = model.lb.copy()
    ub = model.ub.copy()
    if np.any(vals < lb[int_cols] - 1e-9) or np.any(vals > ub[int_cols] + 1e-9):
        return False, None, None, 0
    lb[int_cols] = vals
    ub[int_cols] = vals
    try:
        res = _lp(model, lb, ub, simplex_opts)
    except SolverError:
        return False, None, None, 0
    if res.status != STATUS_OPTIMAL:
        return False, None, None, res.iterations
    x = res.x.copy()
    x[int_cols] = vals
    return True, x, res.obj, res.iterations
