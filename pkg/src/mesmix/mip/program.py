"""Solver-neutral MIP container."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np
from scipy import sparse

VARIABLE_FAMILIES = (
    "flow_port_in", "flow_port_out", "flow_arc", "status", "change", "storage_level",
    "purchase", "sale", "pwl_lambda", "pwl_segment_binary",
)
FLOW_FAMILIES = ("flow_port_in", "flow_port_out", "flow_arc")
CONSTRAINT_FAMILIES = (
    "balance", "conversion", "activation", "min_up", "min_down", "ramp_up", "ramp_down",
    "storage", "capacity", "arc_identity", "information", "capacity_redundant",
)
SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class MipVariable:
    name: str
    family: str
    binary: bool = False
    lo: float = 0.0
    hi: float = math.inf
    owner: str = ""  # node id (or arc id for arc flows)
    t: int = 0

    @property
    def domain(self) -> str:
        return "binary" if self.binary else "continuous"


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[str, float], ...]
    sense: str
    rhs: float
    family: str
    origin: str = ""  # node or arc id the constraint belongs to
    t: int = 0

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.terms)

    def violation(self, values: Mapping[str, float]) -> float:
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


LinearExpr = tuple[tuple[str, float], ...]


def combine(terms: Iterable[tuple[str, float]]) -> LinearExpr:
    """Merge repeated variables and drop zero coefficients, keeping first-seen order."""
    acc: dict[str, float] = {}
    for v, c in terms:
        acc[v] = acc.get(v, 0.0) + float(c)
    return tuple((v, c) for v, c in acc.items() if c != 0.0)


@dataclass(frozen=True)
class MipProgram:
    variables: tuple[MipVariable, ...]
    constraints: tuple[LinearConstraint, ...]
    objectives: tuple[LinearExpr, LinearExpr, LinearExpr]
    name: str = "mesmix"
    info: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    @property
    def binaries(self) -> list[MipVariable]:
        return [v for v in self.variables if v.binary]

    def family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.variables:
            out[v.family] = out.get(v.family, 0) + 1
        return out

    def constraint_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.family] = out.get(c.family, 0) + 1
        return out

    def objective_value(self, k: int, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.objectives[k])

    def objective_vector(self, values: Mapping[str, float]) -> tuple[float, float, float]:
        return tuple(self.objective_value(k, values) for k in range(3))  # type: ignore[return-value]

    def with_constraints(self, extra: Iterable[LinearConstraint]) -> "MipProgram":
        return MipProgram(self.variables, self.constraints + tuple(extra), self.objectives, self.name, self.info)

    def arrays(self, objective: int = 0) -> "MatrixForm":
        return MatrixForm.build(self, objective)


@dataclass
class MatrixForm:
    """Row-wise sparse matrix view: ``row_lo <= A x <= row_hi``, ``lo <= x <= hi``."""

    c: np.ndarray
    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    integrality: np.ndarray
    names: list[str]

    @classmethod
    def build(cls, program: MipProgram, objective: int = 0) -> "MatrixForm":
        idx = program.index
        n = program.n
        c = np.zeros(n)
        for v, coef in program.objectives[objective]:
            c[idx[v]] += coef
        rows, cols, vals = [], [], []
        row_lo = np.empty(program.m)
        row_hi = np.empty(program.m)
        for i, con in enumerate(program.constraints):
            for v, coef in con.terms:
                rows.append(i)
                cols.append(idx[v])
                vals.append(coef)
            row_lo[i] = con.rhs if con.sense in ("=", ">=") else -np.inf
            row_hi[i] = con.rhs if con.sense in ("=", "<=") else np.inf
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(program.m, n))
        lo = np.array([v.lo for v in program.variables], dtype=float)
        hi = np.array([v.hi for v in program.variables], dtype=float)
        integrality = np.array([1 if v.binary else 0 for v in program.variables], dtype=int)
        return cls(c, A, row_lo, row_hi, lo, hi, integrality, [v.name for v in program.variables])


class ProgramBuilder:
    """Accumulates variables and constraints; rejects duplicate names."""

    def __init__(self, name: str = "mesmix"):
        self.name = name
        self.variables: dict[str, MipVariable] = {}
        self.constraints: list[LinearConstraint] = []
        self.objectives: list[list[tuple[str, float]]] = [[], [], []]

    def var(self, name: str, family: str, lo: float = 0.0, hi: float = math.inf, binary: bool = False,
            owner: str = "", t: int = 0) -> str:
        if name in self.variables:
            raise ValueError(f"duplicate variable {name}")
        if binary:
            lo, hi = 0.0, 1.0
        self.variables[name] = MipVariable(name, family, binary, float(lo), float(hi), owner, t)
        return name

    def add(self, terms: Iterable[tuple[str, float]], sense: str, rhs: float, family: str,
            origin: str = "", t: int = 0) -> Optional[LinearConstraint]:
        expr = combine(terms)
        for v, _ in expr:
            if v not in self.variables:
                raise KeyError(f"constraint references unknown variable {v}")
        con = LinearConstraint(expr, sense, float(rhs), family, origin, t)
        self.constraints.append(con)
        return con

    def objective(self, k: int, terms: Iterable[tuple[str, float]]) -> None:
        self.objectives[k].extend(terms)

    def build(self, **info) -> MipProgram:
        objectives = tuple(combine(o) for o in self.objectives)
        return MipProgram(tuple(self.variables.values()), tuple(self.constraints), objectives, self.name, info)  # type: ignore[arg-type]
