"""Generic mixed-integer linear program container.

A :class:`MipModel` is a plain data structure: variables with bounds and
integrality marks, linear constraints with a sense and right-hand side, and a
linear minimize objective.  Builders in :mod:`stormuc.formulation` fill one in;
solvers in :mod:`stormuc.solver` consume the compiled arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

INF = float("inf")

LE, GE, EQ = "<=", ">=", "="
_SENSES = (LE, GE, EQ)


class ModelError(ValueError):
    """Raised for malformed model construction (bad bounds, unknown vars...)."""


@dataclass
class CompiledModel:
    """Dense/sparse array view of a MipModel, ready for a solver."""

    ncols: int
    nrows: int
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray           # bool per column
    obj: np.ndarray
    obj_const: float
    A: sp.csr_matrix             # nrows x ncols
    sense: np.ndarray            # '<', '>', '=' encoded as int8: -1, +1, 0
    rhs: np.ndarray

    @property
    def int_cols(self) -> np.ndarray:
        return np.flatnonzero(self.is_int)


SENSE_CODE = {LE: -1, GE: 1, EQ: 0}


class MipModel:
    """Variables, linear constraints and a minimize objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.is_int: list[bool] = []
        self.var_names: list[str] = []
        self._name_set: set[str] = set()
        # each row: (np.ndarray var idx, np.ndarray coef)
        self.rows: list[tuple[np.ndarray, np.ndarray]] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self.obj: dict[int, float] = {}
        self.obj_const: float = 0.0

    # -- construction -----------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.lb)

    @property
    def num_constrs(self) -> int:
        return len(self.rows)

    def add_var(self, lb: float = 0.0, ub: float = INF, integer: bool = False,
                name: str | None = None) -> int:
        if lb > ub:
            raise ModelError(f"variable {name or len(self.lb)}: lb {lb} > ub {ub}")
        idx = len(self.lb)
        if name is None:
            name = f"x{idx}"
        if name in self._name_set:
            raise ModelError(f"duplicate variable name {name!r}")
        self._name_set.add(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.is_int.append(bool(integer))
        self.var_names.append(name)
        return idx

    def add_constr(self, terms, sense: str, rhs: float, name: str | None = None) -> int:
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        n = self.num_vars
        acc: dict[int, float] = {}
        for j, c in terms:
            j = int(j)
            if j < 0 or j >= n:
                raise ModelError(f"constraint {name or len(self.rows)}: unknown variable index {j}")
            acc[j] = acc.get(j, 0.0) + float(c)
        idx = np.fromiter(acc.keys(), dtype=np.int64, count=len(acc))
        coef = np.fromiter(acc.values(), dtype=np.float64, count=len(acc))
        order = np.argsort(idx)
        row = len(self.rows)
        self.rows.append((idx[order], coef[order]))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name if name is not None else f"c{row}")
        return row

    def set_bounds(self, j: int, lb: float | None = None, ub: float | None = None) -> None:
        if lb is not None:
            self.lb[j] = float(lb)
        if ub is not None:
            self.ub[j] = float(ub)
        if self.lb[j] > self.ub[j]:
            raise ModelError(f"variable {self.var_names[j]}: lb {self.lb[j]} > ub {self.ub[j]}")

    def set_objective(self, terms, const: float = 0.0) -> None:
        self.obj = {}
        self.obj_const = float(const)
        for j, c in terms:
            j = int(j)
            if j < 0 or j >= self.num_vars:
                raise ModelError(f"objective: unknown variable index {j}")
            self.obj[j] = self.obj.get(j, 0.0) + float(c)

    def add_objective_term(self, j: int, c: float) -> None:
        if j < 0 or j >= self.num_vars:
            raise ModelError(f"objective: unknown variable index {j}")
        self.obj[int(j)] = self.obj.get(int(j), 0.0) + float(c)

    # -- export ------------------------------------------------------------

    def compile(self) -> CompiledModel:
        n, m = self.num_vars, self.num_constrs
        indptr = np.zeros(m + 1, dtype=np.int64)
        for i, (idx, _) in enumerate(self.rows):
            indptr[i + 1] = indptr[i] + idx.size
        indices = np.empty(indptr[-1], dtype=np.int64)
        data = np.empty(indptr[-1], dtype=np.float64)
        for i, (idx, coef) in enumerate(self.rows):
            indices[indptr[i]:indptr[i + 1]] = idx
            data[indptr[i]:indptr[i + 1]] = coef
        A = sp.csr_matrix((data, indices, indptr), shape=(m, n))
        obj = np.zeros(n)
        for j, c in self.obj.items():
            obj[j] = c
        return CompiledModel(
            ncols=n,
            nrows=m,
            lb=np.asarray(self.lb, dtype=np.float64),
            ub=np.asarray(self.ub, dtype=np.float64),
            is_int=np.asarray(self.is_int, dtype=bool),
            obj=obj,
            obj_const=self.obj_const,
            A=A,
            sense=np.asarray([SENSE_CODE[s] for s in self.senses], dtype=np.int8),
            rhs=np.asarray(self.rhs, dtype=np.float64),
        )

    def append_model(self, other: "MipModel", prefix: str = "") -> int:
        """Merge another model's variables and constraints; returns the column offset.

        The other model's objective is ignored; callers add their own terms.
        """
        off = self.num_vars
        for j in range(other.num_vars):
            self.add_var(other.lb[j], other.ub[j], other.is_int[j],
                         prefix + other.var_names[j])
        for i, (idx, coef) in enumerate(other.rows):
            self.rows.append((idx + off, coef.copy()))
            self.senses.append(other.senses[i])
            self.rhs.append(other.rhs[i])
            self.row_names.append(prefix + other.row_names[i])
        return off

    def to_lp_text(self) -> str:
        """Dump in CPLEX-LP-style text, deterministic ordering, for cross-checks."""
        out = [f"\\ {self.name}", "Minimize", " obj:"]
        terms = [f" {self.obj.get(j, 0.0):+.17g} {self.var_names[j]}"
                 for j in sorted(self.obj)]
        if self.obj_const:
            terms.append(f" {self.obj_const:+.17g} one")
        out.extend(terms if terms else [" 0 x0"])
        out.append("Subject To")
        op = {LE: "<=", GE: ">=", EQ: "="}
        for i, (idx, coef) in enumerate(self.rows):
            body = " ".join(f"{c:+.17g} {self.var_names[j]}" for j, c in zip(idx, coef))
            out.append(f" {self.row_names[i]}: {body} {op[self.senses[i]]} {self.rhs[i]:.17g}")
        out.append("Bounds")
        for j in range(self.num_vars):
            lo = f"{self.lb[j]:.17g}" if self.lb[j] > -INF else "-inf"
            hi = f"{self.ub[j]:.17g}" if self.ub[j] < INF else "+inf"
            out.append(f" {lo} <= {self.var_names[j]} <= {hi}")
        ints = [self.var_names[j] for j in range(self.num_vars) if self.is_int[j]]
        if ints:
            out.append("Generals")
            out.append(" " + " ".join(ints))
        out.append("End")
        return "\n".join(out) + "\n"
