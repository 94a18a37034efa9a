"""Exact MIP solving: branch-and-bound over the builtin simplex, a HiGHS
backend for larger programs, the lexicographic driver and the brute-force
oracle."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt
from scipy import optimize

from ..errors import StageFailure, TooManyBinaries
from ..mip.program import MatrixForm, MipProgram
from .simplex import solve_lp_arrays

BRUTE_FORCE_CAP = 20
# under backend="auto", programs beyond either limit go to HiGHS
AUTO_BUILTIN_LIMIT = 400
AUTO_BUILTIN_BINARIES = 32


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"
    NODE_LIMIT = "NodeLimit"
    TIME_LIMIT = "TimeLimit"


class SolveConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    lp_tolerance: PositiveFloat = 1e-9
    integrality_tolerance: PositiveFloat = 1e-6
    lex_relative: PositiveFloat = 1e-6
    node_limit: PositiveInt = 200_000
    time_limit: Optional[PositiveFloat] = None
    iteration_limit: PositiveInt = 200_000
    backend: str = Field("auto", pattern="^(auto|builtin|highs)$")
    mip_gap: PositiveFloat = 1e-9

    def lex_epsilon(self, optimum: float) -> float:
        return self.lex_relative * max(1.0, abs(optimum))


@dataclass
class StageRecord:
    index: int
    optimum: float
    cap: float  # bound imposed on this objective in later stages

    def to_json(self) -> dict:
        return {"stage": self.index, "optimum": self.optimum, "cap": self.cap}


@dataclass
class Solution:
    status: Status
    values: dict[str, float] = field(default_factory=dict)
    objective_vector: tuple[float, float, float] = (math.nan, math.nan, math.nan)
    stages: list[StageRecord] = field(default_factory=list)
    nodes: int = 0
    backend: str = ""
    # objective values at the returned point; differs from the stage optima by at most the lex caps
    point_objectives: tuple[float, float, float] = (math.nan, math.nan, math.nan)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# --------------------------------------------------------------------------
# matrix helpers


@dataclass
class _Problem:
    c: np.ndarray
    A: np.ndarray
    row_lo: np.ndarray
    row_hi: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    binary: np.ndarray  # indices, sorted by variable name
    names: list[str]


def _problem(program: MipProgram, objective: int, caps: Sequence[tuple[int, float]] = ()) -> tuple[_Problem, MatrixForm]:
    mf = program.arrays(objective)
    A = mf.A
    row_lo, row_hi = mf.row_lo, mf.row_hi
    if caps:
        idx = program.index
        extra = np.zeros((len(caps), program.n))
        for row, (k, _) in enumerate(caps):
            for name, coef in program.objectives[k]:
                extra[row, idx[name]] += coef
        A = _vstack(A, extra)
        row_lo = np.concatenate([row_lo, np.full(len(caps), -np.inf)])
        row_hi = np.concatenate([row_hi, [b for _, b in caps]])
    binary = np.array(sorted(np.flatnonzero(mf.integrality), key=lambda j: mf.names[j]), dtype=int)
    return _Problem(mf.c, A, row_lo, row_hi, mf.lo.copy(), mf.hi.copy(), binary, mf.names), mf


def _vstack(A, rows):
    from scipy import sparse

    return sparse.vstack([A, sparse.csr_matrix(rows)]).tocsr()


def _values(names: list[str], x: np.ndarray) -> dict[str, float]:
    return {n: float(v) for n, v in zip(names, x)}


# --------------------------------------------------------------------------
# builtin branch-and-bound


def _lp(p: _Problem, lo: np.ndarray, hi: np.ndarray, cfg: SolveConfig, dense: np.ndarray):
    return solve_lp_arrays(p.c, dense, p.row_lo, p.row_hi, lo, hi, cfg.lp_tolerance, cfg.iteration_limit)


def _fractional(p: _Problem, x: np.ndarray, tol: float) -> int:
    best, pick = tol, -1
    for j in p.binary:  # already in name order, so ties keep the lowest name
        frac = min(x[j] - math.floor(x[j]), math.ceil(x[j]) - x[j])
        if frac > best + 1e-12:
            best, pick = frac, int(j)
    return pick


def branch_and_bound(p: _Problem, cfg: SolveConfig) -> tuple[Status, Optional[np.ndarray], float, int]:
    dense = p.A.toarray() if hasattr(p.A, "toarray") else np.asarray(p.A)
    start = time.monotonic()
    incumbent, best = None, math.inf
    counter = itertools.count()
    open_nodes: list = []  # (bound, seq, lo, hi)
    nodes = 0

    def cutoff(bound: float) -> bool:
        return bound >= best - 1e-9 * max(1.0, abs(best))

    root = _lp(p, p.lo, p.hi, cfg, dense)
    if root.status != "Optimal":
        return Status(root.status), None, math.inf, 1
    stack = [(root, p.lo, p.hi)]
    while True:
        while stack:
            res, lo, hi = stack.pop()
            nodes += 1
            if nodes > cfg.node_limit:
                return Status.NODE_LIMIT, incumbent, best, nodes
            if cfg.time_limit is not None and time.monotonic() - start > cfg.time_limit:
                return Status.TIME_LIMIT, incumbent, best, nodes
            if cutoff(res.objective):
                continue
            j = _fractional(p, res.x, cfg.integrality_tolerance)
            if j < 0:
                incumbent, best = res.x, res.objective
                continue
            children = []
            for value in (0.0, 1.0):
                clo, chi = lo.copy(), hi.copy()
                clo[j] = chi[j] = value
                child = _lp(p, clo, chi, cfg, dense)
                if child.status == "Optimal" and not cutoff(child.objective):
                    children.append((value, child, clo, chi))
            preferred = 1.0 if res.x[j] >= 0.5 else 0.0
            children.sort(key=lambda item: item[0] != preferred)
            if children:
                first = children[0]
                for value, child, clo, chi in children[1:]:
                    heapq.heappush(open_nodes, (child.objective, next(counter), child, clo, chi))
                stack.append((first[1], first[2], first[3]))
        # backtrack to the best remaining bound
        while open_nodes:
            bound, _, child, clo, chi = heapq.heappop(open_nodes)
            if not cutoff(bound):
                stack.append((child, clo, chi))
                break
        if not stack:
            break
    if incumbent is None:
        return Status.INFEASIBLE, None, math.inf, nodes
    return Status.OPTIMAL, incumbent, best, nodes


def _polish(p: _Problem, x: np.ndarray, cfg: SolveConfig, backend: str) -> Optional[np.ndarray]:
    """Fix binaries at their rounded values and re-solve the LP for clean continuous values."""
    lo, hi = p.lo.copy(), p.hi.copy()
    if p.binary.size:
        rounded = np.round(x[p.binary])
        lo[p.binary] = hi[p.binary] = rounded
    if backend == "builtin":
        res = solve_lp_arrays(p.c, p.A.toarray(), p.row_lo, p.row_hi, lo, hi, cfg.lp_tolerance, cfg.iteration_limit)
        return np.clip(res.x, lo, hi) if res.status == "Optimal" else None
    res = optimize.linprog(
        p.c, bounds=list(zip(lo, hi)), method="highs",
        **_linprog_rows(p.A, p.row_lo, p.row_hi),
    )
    if res.status != 0:
        return None
    out = np.clip(res.x, lo, hi)
    return out


def _linprog_rows(A, row_lo, row_hi) -> dict:
    from scipy import sparse

    A = sparse.csr_matrix(A)
    eq = np.isfinite(row_lo) & np.isfinite(row_hi) & (row_lo == row_hi)
    ub = np.isfinite(row_hi) & ~eq
    lb = np.isfinite(row_lo) & ~eq
    blocks, rhs = [], []
    if ub.any():
        blocks.append(A[ub])
        rhs.append(row_hi[ub])
    if lb.any():
        blocks.append(-A[lb])
        rhs.append(-row_lo[lb])
    out = {}
    if blocks:
        out["A_ub"] = sparse.vstack(blocks).tocsr()
        out["b_ub"] = np.concatenate(rhs)
    if eq.any():
        out["A_eq"] = A[eq]
        out["b_eq"] = row_lo[eq]
    return out


def _highs(p: _Problem, cfg: SolveConfig) -> tuple[Status, Optional[np.ndarray], float, int]:
    integrality = np.zeros(len(p.c), dtype=int)
    integrality[p.binary] = 1
    options = {"mip_rel_gap": cfg.mip_gap, "presolve": True, "disp": False}
    if cfg.time_limit is not None:
        options["time_limit"] = cfg.time_limit
    if len(p.row_lo):
        cons = optimize.LinearConstraint(p.A, p.row_lo, p.row_hi)
        res = optimize.milp(p.c, constraints=cons, integrality=integrality,
                            bounds=optimize.Bounds(p.lo, p.hi), options=options)
    else:
        res = optimize.milp(p.c, integrality=integrality, bounds=optimize.Bounds(p.lo, p.hi), options=options)
    if res.status == 0:
        return Status.OPTIMAL, res.x, float(res.fun), int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return Status.INFEASIBLE, None, math.inf, 0
    if res.status == 3:
        return Status.UNBOUNDED, None, -math.inf, 0
    if res.status == 1:
        status = Status.TIME_LIMIT if cfg.time_limit is not None else Status.ITERATION_LIMIT
        return status, res.x, float(res.fun) if res.x is not None else math.inf, 0
    return Status.INFEASIBLE, None, math.inf, 0


def _backend(program: MipProgram, cfg: SolveConfig) -> str:
    if cfg.backend != "auto":
        return cfg.backend
    small = program.n <= AUTO_BUILTIN_LIMIT and len(program.binaries) <= AUTO_BUILTIN_BINARIES
    return "builtin" if small else "highs"


def _solve_stage(program: MipProgram, objective: int, caps, cfg: SolveConfig, relax: bool = False) -> Solution:
    p, _ = _problem(program, objective, caps)
    if relax:
        p.binary = np.array([], dtype=int)
    backend = _backend(program, cfg)
    if backend == "builtin":
        status, x, _, nodes = branch_and_bound(p, cfg)
    else:
        status, x, _, nodes = _highs(p, cfg)
    if x is not None and not relax:
        polished = _polish(p, x, cfg, backend)
        if polished is not None:
            x = polished
    if x is None:
        return Solution(status, nodes=nodes, backend=backend)
    values = _values(p.names, x)
    return Solution(status, values, program.objective_vector(values), nodes=nodes, backend=backend)


# --------------------------------------------------------------------------
# public API


def solve_lp(program: MipProgram, config: Optional[SolveConfig] = None, objective: int = 0) -> Solution:
    """LP relaxation (binaries relaxed to [0, 1]) with the builtin simplex."""
    cfg = config or SolveConfig()
    p, _ = _problem(program, objective)
    dense = p.A.toarray()
    res = _lp(p, p.lo, p.hi, cfg, dense)
    if res.status != "Optimal":
        return Solution(Status(res.status), backend="builtin")
    values = _values(p.names, res.x)
    return Solution(Status.OPTIMAL, values, program.objective_vector(values), backend="builtin")


def solve_mip(program: MipProgram, config: Optional[SolveConfig] = None, objective: int = 0) -> Solution:
    return _solve_stage(program, objective, (), config or SolveConfig())


def solve_lexicographic(program: MipProgram, config: Optional[SolveConfig] = None) -> Solution:
    """Minimize f1, then f2 with f1 capped, then f3 with both capped."""
    cfg = config or SolveConfig()
    caps: list[tuple[int, float]] = []
    stages: list[StageRecord] = []
    sol: Optional[Solution] = None
    for k in range(3):
        sol = _solve_stage(program, k, caps, cfg)
        if not sol.optimal:
            raise StageFailure(k + 1, sol.status.value, f"stage {k + 1} ended {sol.status.value}")
        optimum = program.objective_value(k, sol.values)
        cap = optimum + cfg.lex_epsilon(optimum)
        stages.append(StageRecord(k + 1, optimum, cap))
        caps.append((k, cap))
    assert sol is not None
    sol.stages = stages
    sol.point_objectives = sol.objective_vector
    sol.objective_vector = tuple(st.optimum for st in stages)
    return sol


def brute_force(program: MipProgram, config: Optional[SolveConfig] = None) -> Solution:
    """Enumerate every binary assignment; residual LPs go to HiGHS, not the builtin simplex.

    Stages follow the same capped semantics as :func:`solve_lexicographic`:
    each stage minimum is taken over all assignments before the next cap is set.
    """
    cfg = config or SolveConfig()
    binaries = program.binaries
    if len(binaries) > BRUTE_FORCE_CAP:
        raise TooManyBinaries(f"{len(binaries)} binaries exceed the cap of {BRUTE_FORCE_CAP}")
    order = sorted(binaries, key=lambda v: v.name)
    caps: list[tuple[int, float]] = []
    stages: list[StageRecord] = []
    alive = list(itertools.product((0.0, 1.0), repeat=len(order)))
    best_x, best_p = None, None
    for k in range(3):
        p, mf = _problem(program, k, caps)
        idx = {n: i for i, n in enumerate(mf.names)}
        cols = [idx[v.name] for v in order]
        # milp without integrality is a plain HiGHS LP with less input handling than linprog
        rows = [optimize.LinearConstraint(p.A, p.row_lo, p.row_hi)] if p.A.shape[0] else []
        best, best_x, survivors = math.inf, None, []
        for assignment in alive:
            lo, hi = p.lo.copy(), p.hi.copy()
            lo[cols] = hi[cols] = assignment
            res = optimize.milp(p.c, constraints=rows, bounds=optimize.Bounds(lo, hi))
            if res.status == 3:
                return Solution(Status.UNBOUNDED, backend="brute_force")
            if res.status != 0:
                continue
            survivors.append((assignment, float(res.fun)))
            if res.fun < best - 1e-12:
                best, best_x = float(res.fun), np.clip(res.x, lo, hi)
        if best_x is None:
            if k == 0:
                return Solution(Status.INFEASIBLE, backend="brute_force")
            raise StageFailure(k + 1, "Infeasible", "capped stage became infeasible")
        cap = best + cfg.lex_epsilon(best)
        # an assignment whose own minimum exceeds the cap is infeasible in every later stage
        alive = [a for a, value in survivors if value <= cap + 1e-9 * max(1.0, abs(cap))]
        stages.append(StageRecord(k + 1, best, cap))
        caps.append((k, cap))
        best_p = p
    values = _values(best_p.names, best_x)
    vector = tuple(st.optimum for st in stages)
    return Solution(Status.OPTIMAL, values, vector, stages, backend="brute_force",
                    point_objectives=program.objective_vector(values))
