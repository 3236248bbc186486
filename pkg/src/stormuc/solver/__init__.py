"""Pluggable LP/MILP solving.

The embedded backend (bounded revised simplex + branch-and-bound) is the
default.  A scipy/HiGHS adapter is registered as ``"scipy"`` for
cross-checking.  Backends are selected by name from the case file's solver
section or the CLI ``--backend`` flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import CompiledModel, MipModel
from .branch_bound import MipResult, solve_mip_bb
from .simplex import (STATUS_INFEASIBLE, STATUS_OPTIMAL, STATUS_UNBOUNDED,
                      BoundedSimplex, SolverError)


class ConfigError(ValueError):
    """Bad solver configuration (unknown backend, duplicate registration...)."""


@dataclass
class SolverConfig:
    feas_tol: float = 1e-7
    gap_tol: float = 1e-6
    integrality_tol: float = 1e-6
    mip_rel_gap: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None

    def __post_init__(self):
        for name in ("feas_tol", "gap_tol", "integrality_tol", "mip_rel_gap"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")


@dataclass
class LpSolution:
    status: str                       # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    duals: np.ndarray | None = None   # sense-signed nonnegative multipliers
    obj: float | None = None
    dual_obj: float | None = None
    iterations: int = 0


@dataclass
class MipSolution:
    status: str                       # optimal | infeasible | unbounded | limit
    x: np.ndarray | None = None
    obj: float | None = None
    bound: float | None = None
    nodes: int = 0
    iterations: int = 0


class EmbeddedBackend:
    """The in-repo simplex + branch-and-bound pair."""

    name = "embedded"

    def solve_lp(self, model: CompiledModel, config: SolverConfig) -> LpSolution:
        if model.ncols < 1:
            raise ValueError("model has no variables")
        relaxed = CompiledModel(
            ncols=model.ncols, nrows=model.nrows, lb=model.lb, ub=model.ub,
            is_int=np.zeros(model.ncols, dtype=bool), obj=model.obj,
            obj_const=model.obj_const, A=model.A, sense=model.sense, rhs=model.rhs)
        res = BoundedSimplex(relaxed, feas_tol=config.feas_tol).solve()
        return LpSolution(status=res.status, x=res.x, duals=res.duals, obj=res.obj,
                          dual_obj=res.dual_obj, iterations=res.iterations)

    def solve_mip(self, model: CompiledModel, config: SolverConfig,
                  mip_start=None) -> MipSolution:
        if model.ncols < 1:
            raise ValueError("model has no variables")
        res = solve_mip_bb(model, integrality_tol=config.integrality_tol,
                           mip_rel_gap=config.mip_rel_gap,
                           node_limit=config.node_limit,
                           time_limit=config.time_limit, mip_start=mip_start,
                           simplex_opts={"feas_tol": config.feas_tol})
        return MipSolution(status=res.status, x=res.x, obj=res.obj, bound=res.bound,
                           nodes=res.nodes, iterations=res.iterations)


class ScipyBackend:
    """Adapter over scipy.optimize (HiGHS) with matching dual conventions."""

    name = "scipy"

    def solve_lp(self, model: CompiledModel, config: SolverConfig) -> LpSolution:
        from scipy.optimize import linprog

        A = model.A.tocsr()
        le = model.sense == -1
        ge = model.sense == 1
        eq = model.sense == 0
        ub_rows = np.flatnonzero(le | ge)
        sign = np.where(ge[ub_rows], -1.0, 1.0)
        A_ub = (A[ub_rows].multiply(sign[:, None])).tocsr() if ub_rows.size else None
        b_ub = model.rhs[ub_rows] * sign if ub_rows.size else None
        eq_rows = np.flatnonzero(eq)
        A_eq = A[eq_rows] if eq_rows.size else None
        b_eq = model.rhs[eq_rows] if eq_rows.size else None
        bounds = list(zip(np.where(np.isfinite(model.lb), model.lb, -np.inf),
                          np.where(np.isfinite(model.ub), model.ub, np.inf)))
        res = linprog(model.obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status == 2:
            return LpSolution(STATUS_INFEASIBLE)
        if res.status == 3:
            return LpSolution(STATUS_UNBOUNDED)
        if not res.success:
            raise SolverError(f"scipy linprog failed: {res.message}")
        duals = np.zeros(model.nrows)
        if ub_rows.size:
            duals[ub_rows] = -np.asarray(res.ineqlin.marginals)
        if eq_rows.size:
            duals[eq_rows] = np.asarray(res.eqlin.marginals)
        obj = float(res.fun) + model.obj_const
        return LpSolution(STATUS_OPTIMAL, x=np.asarray(res.x), duals=duals,
                          obj=obj, dual_obj=obj, iterations=int(res.nit))

    def solve_mip(self, model: CompiledModel, config: SolverConfig,
                  mip_start=None) -> MipSolution:
        from scipy.optimize import LinearConstraint, milp

        lo = np.where(model.sense == 1, model.rhs, -np.inf)
        lo = np.where(model.sense == 0, model.rhs, lo)
        hi = np.where(model.sense == -1, model.rhs, np.inf)
        hi = np.where(model.sense == 0, model.rhs, hi)
        constraints = LinearConstraint(model.A, lo, hi) if model.nrows else ()
        from scipy.optimize import Bounds

        res = milp(c=model.obj, constraints=constraints,
                   integrality=model.is_int.astype(int),
                   bounds=Bounds(model.lb, model.ub),
                   options={"mip_rel_gap": config.mip_rel_gap})
        if res.status == 2:
            return MipSolution(STATUS_INFEASIBLE)
        if res.status == 3:
            return MipSolution(STATUS_UNBOUNDED)
        if res.status == 1:
            return MipSolution("limit")
        if not res.success:
            raise SolverError(f"scipy milp failed: {res.message}")
        x = np.asarray(res.x)
        ints = model.int_cols
        x[ints] = np.round(x[ints])
        return MipSolution(STATUS_OPTIMAL, x=x, obj=float(res.fun) + model.obj_const,
                           bound=float(res.mip_dual_bound) + model.obj_const)


_BACKENDS: dict[str, object] = {}


def register_backend(name: str, adapter) -> None:
    if name in _BACKENDS:
        raise ConfigError(f"backend {name!r} already registered")
    if not (hasattr(adapter, "solve_lp") and hasattr(adapter, "solve_mip")):
        raise ConfigError("adapter must implement solve_lp and solve_mip")
    _BACKENDS[name] = adapter


def get_backend(name: str = "embedded"):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(f"unknown solver backend {name!r}; "
                          f"registered: {sorted(_BACKENDS)}") from None


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


register_backend("embedded", EmbeddedBackend())
try:
    import scipy.optimize  # noqa: F401
    register_backend("scipy", ScipyBackend())
except ImportError:  # pragma: no cover
    pass


def solve_lp(model: MipModel | CompiledModel, config: SolverConfig | None = None,
             backend: str = "embedded") -> LpSolution:
    """Solve the LP relaxation (integrality marks ignored)."""
    config = config or SolverConfig()
    compiled = model.compile() if isinstance(model, MipModel) else model
    return get_backend(backend).solve_lp(compiled, config)


def solve_mip(model: MipModel | CompiledModel, config: SolverConfig | None = None,
              backend: str = "embedded", mip_start=None) -> MipSolution:
    config = config or SolverConfig()
    compiled = model.compile() if isinstance(model, MipModel) else model
    return get_backend(backend).solve_mip(compiled, config, mip_start=mip_start)
