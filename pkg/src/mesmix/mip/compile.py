"""Compile either graph form into a :class:`MipProgram`.

Both models share one compiler.  Node constraints are written against flow
*handles*: in arc mode (Model B) both ends of an arc share one ``flow_arc``
variable; in port mode (Model A) the tail's out-port and the head's in-port
are separate variables tied by an ``arc_identity`` row.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

from ..errors import UnboundedVariable
from ..model_a import ModelAGraph, ObjectiveTerm, port_variable_name
from ..model_b import ModelBGraph
from ..network import (
    Arc,
    Balance,
    Bounds,
    Demand,
    GeneratingUnit,
    Market,
    NetworkGraph,
    ObjectiveNode,
    Storage,
    TimeGrid,
    flow_capacity,
    heat_output,
)
from ..pwl import PiecewiseLinear
from .program import MipProgram, ProgramBuilder

Expr = list[tuple[str, float]]


def var_name(family: str, *parts) -> str:
    return f"{family}({','.join(str(p) for p in parts)})"


def encode_pwl(
    pb: ProgramBuilder,
    unit: str,
    curve: PiecewiseLinear,
    x_in: Expr,
    x_out: Expr,
    z: str,
    t: int,
    tag: str = "",
) -> tuple[list[str], int]:
    """Incremental encoding of ``x_out = curve(x_in)`` switched by ``z``.

    Adds ``rho - 1`` fill variables, ``rho - 1`` ordering binaries and
    ``2 rho - 1`` rows.  Fill variables vanish when ``z = 0`` only through
    the unit's capacity row, so callers must add that row as well.
    Returns the new variable names and the number of rows added.
    """
    xs, ys = curve.source, curve.target
    widths = [b - a for a, b in zip(xs, xs[1:])]
    slopes = curve.slopes
    key = f"{unit},{tag}" if tag else unit
    deltas = [pb.var(var_name("pwl_lambda", key, k, t), "pwl_lambda", 0.0, w, owner=unit, t=t)
              for k, w in enumerate(widths, 1)]
    bins = [pb.var(var_name("pwl_segment_binary", key, k, t), "pwl_segment_binary", binary=True, owner=unit, t=t)
            for k in range(1, len(widths) + 1)]
    pb.add(list(x_in) + [(z, -xs[0])] + [(d, -1.0) for d in deltas], "=", 0.0, "conversion", unit, t)
    pb.add(list(x_out) + [(z, -ys[0])] + [(d, -s) for d, s in zip(deltas, slopes)], "=", 0.0, "conversion", unit, t)
    rows = 2
    for d, b, w in zip(deltas, bins, widths):
        pb.add([(d, 1.0), (b, -w)], "<=", 0.0, "conversion", unit, t)
        rows += 1
    for k in range(len(deltas) - 1):
        pb.add([(deltas[k], 1.0), (bins[k + 1], -widths[k])], ">=", 0.0, "conversion", unit, t)
        rows += 1
    return deltas + bins, rows


class _Compiler:
    def __init__(self, g: NetworkGraph, grid: TimeGrid, bounds: Bounds, mode: str,
                 implicit_terms: Sequence[ObjectiveTerm], extras: bool = False):
        self.g = g
        self.grid = grid
        self.bounds = bounds
        self.mode = mode
        self.terms = list(implicit_terms)
        self.extras = extras
        self.pb = ProgramBuilder(g.name or "mesmix")
        self.out_h: dict[tuple[str, int], str] = {}
        self.in_h: dict[tuple[str, int], str] = {}
        self.hi: dict[str, float] = {}

    # ---- variables

    def _flow_vars(self, arc: Arc, hi: float) -> None:
        pb = self.pb
        for t in self.grid.steps:
            if self.mode == "arc":
                name = pb.var(var_name("flow_arc", arc.id, arc.resource, t), "flow_arc", 0.0, hi, owner=arc.id, t=t)
                self.out_h[arc.id, t] = self.in_h[arc.id, t] = name
            else:
                out = port_variable_name("out", arc.tail, arc.id, arc.resource, t)
                inn = port_variable_name("in", arc.head, arc.id, arc.resource, t)
                self.out_h[arc.id, t] = pb.var(out, "flow_port_out", 0.0, hi, owner=arc.tail, t=t)
                self.in_h[arc.id, t] = pb.var(inn, "flow_port_in", 0.0, hi, owner=arc.head, t=t)

    def _node_vars(self) -> None:
        pb, g = self.pb, self.g
        for v, node in g.nodes.items():
            for t in self.grid.steps:
                if isinstance(node, GeneratingUnit):
                    pb.var(var_name("status", v, t), "status", binary=True, owner=v, t=t)
                    pb.var(var_name("startup", v, t), "change", 0.0, 1.0, owner=v, t=t)
                    pb.var(var_name("shutdown", v, t), "change", 0.0, 1.0, owner=v, t=t)
                elif isinstance(node, Storage):
                    pb.var(var_name("level", v, t), "storage_level", node.level_min, node.level_max, owner=v, t=t)
                elif isinstance(node, Market):
                    outs = [a for a in g.out_arcs(v) if a.resource == node.resource]
                    ins = [a for a in g.in_arcs(v) if a.resource == node.resource]
                    if outs:
                        hi = min(self.bounds.purchase.hi, sum(self.hi[a.id] for a in outs))
                        pb.var(var_name("purchase", v, t), "purchase", self.bounds.purchase.lo, hi, owner=v, t=t)
                    if ins:
                        hi = min(self.bounds.sale.hi, sum(self.hi[a.id] for a in ins))
                        pb.var(var_name("sale", v, t), "sale", self.bounds.sale.lo, hi, owner=v, t=t)

    # ---- objective terms

    def term_expr(self, term: ObjectiveTerm, t: int) -> Expr:
        node = self.g.nodes[term.node]
        dt = self.grid.step_hours
        v = term.node
        if term.term == "purchase":
            return [(var_name("purchase", v, t), dt * node.buy_price[t - 1])]
        if term.term == "sale":
            return [(var_name("sale", v, t), dt * node.sell_price[t - 1])]
        if term.term == "emission":
            return [(var_name("purchase", v, t), dt * node.emission_factor)]
        if term.term == "startup":
            return [(var_name("startup", v, t), node.startup_cost)]
        if term.term == "chp_heat":
            heat = heat_output(node, self.g.resource_map)
            return [(self.out_h[a.id, t], dt) for a in self.g.out_arcs(v) if a.resource == heat]
        raise ValueError(f"unknown objective term {term.term}")

    def _expr_hi(self, expr: Expr) -> float:
        return sum(c * self.pb.variables[name].hi for name, c in expr if c > 0)

    # ---- constraints per node kind

    def _balance(self, v: str, node, t: int) -> None:
        pb, g = self.pb, self.g
        if isinstance(node, ObjectiveNode):
            return
        if isinstance(node, Market):
            outs = [a for a in g.out_arcs(v) if a.resource == node.resource]
            ins = [a for a in g.in_arcs(v) if a.resource == node.resource]
            if outs:
                pb.add([(var_name("purchase", v, t), 1.0)] + [(self.out_h[a.id, t], -1.0) for a in outs],
                       "=", 0.0, "balance", v, t)
            if ins:
                pb.add([(var_name("sale", v, t), 1.0)] + [(self.in_h[a.id, t], -1.0) for a in ins],
                       "=", 0.0, "balance", v, t)
            return
        if isinstance(node, Demand):
            terms = [(self.in_h[a.id, t], 1.0) for a in g.in_arcs(v)]
            terms += [(self.out_h[a.id, t], -1.0) for a in g.out_arcs(v)]
            pb.add(terms, "=", node.demand[t - 1], "balance", v, t)
            return
        if isinstance(node, Balance):
            resources = dict.fromkeys([a.resource for a in g.in_arcs(v)] + [a.resource for a in g.out_arcs(v)])
            for r in resources:
                terms = [(self.in_h[a.id, t], 1.0) for a in g.in_arcs(v) if a.resource == r]
                terms += [(self.out_h[a.id, t], -1.0) for a in g.out_arcs(v) if a.resource == r]
                pb.add(terms, "=", 0.0, "balance", v, t)

    def _unit(self, v: str, unit: GeneratingUnit) -> None:
        pb, g, T = self.pb, self.g, self.grid.step_count
        resource_ins = [a for a in g.in_arcs(v) if not g.is_information(a.resource)]
        resource_outs = [a for a in g.out_arcs(v) if not g.is_information(a.resource)]
        x_max = max(c.curve.domain[1] for c in unit.conversions)
        for t in self.grid.steps:
            z = var_name("status", v, t)
            x_in = [(self.in_h[a.id, t], 1.0) for a in resource_ins if a.resource == unit.conversions[0].resource_in]
            for conv in unit.conversions:
                x_out = [(self.out_h[a.id, t], 1.0) for a in resource_outs if a.resource == conv.resource_out]
                encode_pwl(pb, v, conv.curve, x_in, x_out, z, t, conv.resource_out)
            pb.add(x_in + [(z, -x_max)], "<=", 0.0, "capacity", v, t)

            s, sd = var_name("startup", v, t), var_name("shutdown", v, t)
            prev: Expr = [(var_name("status", v, t - 1), 1.0)] if t > 1 else []
            z0 = 0.0 if t > 1 else float(unit.initial_status)
            neg_prev = [(p, -c) for p, c in prev]
            # startup: s >= z - z_prev, s <= z, s <= 1 - z_prev
            pb.add([(s, 1.0), (z, -1.0)] + prev, ">=", -z0, "activation", v, t)
            pb.add([(s, 1.0), (z, -1.0)], "<=", 0.0, "activation", v, t)
            pb.add([(s, 1.0)] + prev, "<=", 1.0 - z0, "activation", v, t)
            # shutdown: sd >= z_prev - z, sd <= z_prev, sd <= 1 - z
            pb.add([(sd, 1.0), (z, 1.0)] + neg_prev, ">=", z0, "activation", v, t)
            pb.add([(sd, 1.0)] + neg_prev, "<=", z0, "activation", v, t)
            pb.add([(sd, 1.0), (z, 1.0)], "<=", 1.0, "activation", v, t)

            if unit.min_up >= 2:
                window = range(t, min(t + unit.min_up - 1, T) + 1)
                pb.add([(s, float(len(window)))] + [(var_name("status", v, u), -1.0) for u in window],
                       "<=", 0.0, "min_up", v, t)
            if unit.min_down >= 2:
                window = range(t, min(t + unit.min_down - 1, T) + 1)
                pb.add([(sd, float(len(window)))] + [(var_name("status", v, u), 1.0) for u in window],
                       "<=", float(len(window)), "min_down", v, t)

        for r in unit.output_resources:
            arcs = [a for a in resource_outs if a.resource == r]
            for t in range(1, T):
                now = [(self.out_h[a.id, t], 1.0) for a in arcs]
                nxt = [(self.out_h[a.id, t + 1], 1.0) for a in arcs]
                if unit.ramp_up is not None:
                    pb.add(nxt + [(n, -c) for n, c in now], "<=", unit.ramp_up, "ramp_up", v, t)
                if unit.ramp_down is not None:
                    pb.add(now + [(n, -c) for n, c in nxt], "<=", unit.ramp_down, "ramp_down", v, t)

    def _storage(self, v: str, st: Storage) -> None:
        dt = self.grid.step_hours
        for t in self.grid.steps:
            terms = [(var_name("level", v, t), 1.0)]
            rhs = st.loss * st.initial_level
            if t > 1:
                terms.append((var_name("level", v, t - 1), -st.loss))
                rhs = 0.0
            terms += [(self.in_h[a.id, t], -dt * st.load_eff) for a in self.g.in_arcs(v) if a.resource == st.resource]
            terms += [(self.out_h[a.id, t], dt * st.unload_eff) for a in self.g.out_arcs(v) if a.resource == st.resource]
            self.pb.add(terms, "=", rhs, "storage", v, t)

    # ---- driver

    def run(self) -> MipProgram:
        g, pb = self.g, self.pb
        info_arcs = [a for a in g.arcs if a.info is not None]
        for a in g.arcs:
            if a.info is not None:
                continue
            hi = flow_capacity(a, self.bounds)
            if not math.isfinite(hi):
                raise UnboundedVariable(f"arc {a.id} has no finite capacity")
            self.hi[a.id] = hi
            self._flow_vars(a, hi)
        self._node_vars()

        # information flows: contributor arcs first, then aggregator outputs
        ordered = [a for a in info_arcs if a.info.term != "aggregate"] + [a for a in info_arcs if a.info.term == "aggregate"]
        for a in ordered:
            if a.info.term == "aggregate":
                hi = sum(self.hi[b.id] for b in g.in_arcs(a.tail))
            else:
                term = ObjectiveTerm(a.tail, a.info.objective, a.info.sign, a.info.term)
                hi = max(self._expr_hi(self.term_expr(term, t)) for t in self.grid.steps)
            self.hi[a.id] = hi
            self._flow_vars(a, hi)

        for v, node in g.nodes.items():
            if isinstance(node, GeneratingUnit):
                self._unit(v, node)
            elif isinstance(node, Storage):
                self._storage(v, node)
            else:
                for t in self.grid.steps:
                    self._balance(v, node, t)

        for a in info_arcs:
            if a.info.term == "aggregate":
                continue
            term = ObjectiveTerm(a.tail, a.info.objective, a.info.sign, a.info.term)
            for t in self.grid.steps:
                expr = self.term_expr(term, t)
                pb.add([(self.out_h[a.id, t], 1.0)] + [(n, -c) for n, c in expr], "=", 0.0, "information", a.tail, t)

        if self.mode == "port":
            for a in g.arcs:
                for t in self.grid.steps:
                    pb.add([(self.out_h[a.id, t], 1.0), (self.in_h[a.id, t], -1.0)], "=", 0.0, "arc_identity", a.id, t)
            if self.extras:
                for a in g.arcs:
                    if a.info is not None or a.capacity is None:
                        continue
                    for t in self.grid.steps:
                        for h in (self.out_h[a.id, t], self.in_h[a.id, t]):
                            pb.add([(h, 1.0)], "<=", a.capacity, "capacity_redundant", a.id, t)

        for v, node in g.nodes.items():
            if isinstance(node, ObjectiveNode):
                for a in g.in_arcs(v):
                    for t in self.grid.steps:
                        pb.objective(node.objective - 1, [(self.in_h[a.id, t], float(a.info.sign))])
        for term in self.terms:
            for t in self.grid.steps:
                pb.objective(term.objective - 1, [(n, term.sign * c) for n, c in self.term_expr(term, t)])
        return pb.build(mode=self.mode, steps=self.grid.step_count, step_hours=self.grid.step_hours)


def _grid(g: NetworkGraph, grid: Optional[TimeGrid]) -> TimeGrid:
    return grid if grid is not None else g.grid


def compile_model_a(ma: ModelAGraph, grid: Optional[TimeGrid] = None, bounds: Optional[Bounds] = None,
                    extras: bool = False) -> MipProgram:
    """Port-based compilation; ``extras`` adds redundant per-port capacity rows."""
    return _Compiler(ma.base, _grid(ma.base, grid), bounds or Bounds(), "port", ma.objective_terms, extras).run()


def compile_model_b(mb: ModelBGraph, grid: Optional[TimeGrid] = None, bounds: Optional[Bounds] = None) -> MipProgram:
    """Arc-based compilation; objectives come from the per-node metadata."""
    return _Compiler(mb.base, _grid(mb.base, grid), bounds or Bounds(), "arc", mb.objective_terms).run()


def compile_graph(g: NetworkGraph, mode: str, terms: Iterable[ObjectiveTerm] = (), bounds: Optional[Bounds] = None) -> MipProgram:
    """Compile a plain graph in either flow mode (used for same-graph comparisons)."""
    return _Compiler(g, g.grid, bounds or Bounds(), mode, list(terms)).run()
