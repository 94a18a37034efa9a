"""``mesmix`` command line.

Exit codes: 0 ok, 2 validation failure, 3 solve failure, 4 equivalence failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .compare import PipelineError, run_compare
from .errors import InstanceError, MesmixError, StageFailure
from .generate import ScenarioSpec, berlin_graph, random_instance
from .instance import SCHEMA_VERSION, Instance, dump_instance, instance_schema, load_instance
from .mip import compile_model_a, compile_model_b, export_lp, export_mps, mps_name_map, size_report
from .model_a import build_model_a
from .model_b import flatten
from .network import validate_instance
from .solve import SolveConfig, solution_json, solve_lexicographic, solve_mip
from .solve.core import Status

EXIT_VALIDATION, EXIT_SOLVE, EXIT_EQUIVALENCE = 2, 3, 4

input_option = click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False),
                            help="Instance JSON file.")
out_option = click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
                          help="Write output here instead of stdout.")
json_option = click.option("--json", "as_json", is_flag=True, help="Machine-readable JSON output.")
model_option = click.option("--model", type=click.Choice(["a", "b"]), default="b", show_default=True)


def _emit(text: str, out_path: Optional[str]) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        click.echo(text, nl=False)


def _dumps(payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True) + "\n"


def _load(path: str) -> Instance:
    try:
        inst = load_instance(path)
    except InstanceError as exc:
        click.echo(f"error: {exc}", err=True)
        for v in exc.violations:
            click.echo(f"  {v}", err=True)
        sys.exit(EXIT_VALIDATION)
    errors = [v for v in validate_instance(inst.graph) if v.severity == "error"]
    if errors:
        click.echo("error: instance is invalid", err=True)
        for v in errors:
            click.echo(f"  {v}", err=True)
        sys.exit(EXIT_VALIDATION)
    return inst


def _models(inst: Instance, model: str, extras: bool = False):
    try:
        ma = build_model_a(inst.graph)
        if model == "a":
            return ma, compile_model_a(ma, bounds=inst.bounds, extras=extras)
        mb = flatten(ma)
        return mb, compile_model_b(mb, bounds=inst.bounds)
    except MesmixError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Multi-energy unit commitment in a port-based (A) and an arc-based (B) model."""


@main.command()
@input_option
@json_option
def validate(input_path: str, as_json: bool) -> None:
    """Check an instance file against the schema and all invariants."""
    try:
        inst = load_instance(input_path)
        violations = validate_instance(inst.graph)
        items = [{"code": v.code, "subject": v.subject, "detail": v.detail, "severity": v.severity}
                 for v in violations]
    except InstanceError as exc:
        items = [{"code": "Schema", "subject": "", "detail": d, "severity": "error"} for d in exc.violations]
        items = items or [{"code": "Schema", "subject": "", "detail": str(exc), "severity": "error"}]
    errors = [i for i in items if i["severity"] == "error"]
    if as_json:
        click.echo(_dumps({"valid": not errors, "violations": items}), nl=False)
    else:
        for i in items:
            click.echo(f"{i['severity']}: {i['code']}({i['subject']}) {i['detail']}".rstrip())
        click.echo("valid" if not errors else f"invalid: {len(errors)} error(s)")
    sys.exit(EXIT_VALIDATION if errors else 0)


@main.command()
@input_option
@out_option
def build(input_path: str, out_path: Optional[str]) -> None:
    """Build Model A and summarize its containers, ports and information subgraphs."""
    inst = _load(input_path)
    try:
        ma = build_model_a(inst.graph)
    except MesmixError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    payload = {
        "model": "a",
        "nodes": list(ma.base.nodes),
        "arcs": [a.id for a in ma.base.arcs],
        "containers": [c.id for c in ma.base.containers],
        "ports": len(ma.ports),
        "subcomponents": ma.subcomponents,
        "info_subgraphs": {str(k): {"nodes": sorted(n), "arcs": sorted(a)} for k, (n, a) in ma.info_subgraphs.items()},
    }
    _emit(_dumps(payload), out_path)


@main.command()
@input_option
@out_option
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None, help="Write the contraction log.")
def reduce(input_path: str, out_path: Optional[str], log_path: Optional[str]) -> None:
    """Flatten Model A into Model B."""
    inst = _load(input_path)
    try:
        mb = flatten(build_model_a(inst.graph))
    except MesmixError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    if log_path:
        Path(log_path).write_text(_dumps({"steps": [s.to_json() for s in mb.contraction_log]}))
    payload = {
        "model": "b",
        "nodes": list(mb.base.nodes),
        "arcs": [a.id for a in mb.base.arcs],
        "merged_units": {k: list(v) for k, v in mb.merged_units.items()},
        "eliminated_curves": mb.mu,
        "steps": len(mb.contraction_log),
    }
    _emit(_dumps(payload), out_path)


@main.command(name="compile")
@input_option
@model_option
@click.option("--export", "export_format", type=click.Choice(["mps", "lp"]), default=None)
@click.option("--extras", is_flag=True, help="Model A only: add redundant per-port capacity rows.")
@out_option
def compile_cmd(input_path: str, model: str, export_format: Optional[str], extras: bool, out_path: Optional[str]) -> None:
    """Compile one model; print its size report or export MPS / LP text."""
    inst = _load(input_path)
    graph, program = _models(inst, model, extras)
    if export_format is None:
        _emit(_dumps({"model": model, "size": size_report(program, graph).to_json()}), out_path)
        return
    data = export_mps(program) if export_format == "mps" else export_lp(program)
    if out_path:
        Path(out_path).write_bytes(data)
        names = mps_name_map(program) if export_format == "mps" else {}
        if names:
            Path(out_path + ".names.json").write_text(json.dumps(names, indent=2, sort_keys=True) + "\n")
    else:
        click.echo(data.decode("ascii"), nl=False)


@main.command()
@input_option
@model_option
@click.option("--lex/--no-lex", default=True, show_default=True, help="Lexicographic three-stage solve.")
@click.option("--backend", type=click.Choice(["auto", "builtin", "highs"]), default="auto", show_default=True)
@out_option
def solve(input_path: str, model: str, lex: bool, backend: str, out_path: Optional[str]) -> None:
    """Solve one model and print the schedule as JSON."""
    inst = _load(input_path)
    _, program = _models(inst, model)
    cfg = SolveConfig(backend=backend)
    try:
        sol = solve_lexicographic(program, cfg) if lex else solve_mip(program, cfg)
    except StageFailure as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SOLVE)
    _emit(json.dumps(solution_json(sol, program), indent=2, sort_keys=True) + "\n", out_path)
    if sol.status is not Status.OPTIMAL:
        sys.exit(EXIT_SOLVE)


@main.command()
@input_option
@click.option("--backend", type=click.Choice(["auto", "builtin", "highs"]), default="auto", show_default=True)
@click.option("--extras", is_flag=True, help="Model A with redundant per-port capacity rows.")
@json_option
@out_option
def compare(input_path: str, backend: str, extras: bool, as_json: bool, out_path: Optional[str]) -> None:
    """Solve both models lexicographically and compare sizes and objective vectors."""
    inst = _load(input_path)
    try:
        report = run_compare(inst.graph, inst.bounds, SolveConfig(backend=backend), extras=extras,
                             synthetic=inst.document.synthetic)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SOLVE if exc.stage.startswith("solve") else EXIT_VALIDATION)
    if as_json:
        _emit(report.dumps(), out_path)
    else:
        _emit(_human(report.to_json()), out_path)
    if not report.objectives_agree:
        sys.exit(EXIT_EQUIVALENCE)


@main.command()
@input_option
@json_option
@out_option
def report(input_path: str, as_json: bool, out_path: Optional[str]) -> None:
    """Graph and program sizes of both models (no solving)."""
    inst = _load(input_path)
    try:
        rep = run_compare(inst.graph, inst.bounds, solve=False, synthetic=inst.document.synthetic)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    _emit(rep.dumps() if as_json else _human(rep.to_json()), out_path)


@main.command()
@click.option("--template", type=click.Choice(["berlin_dh", "random"]), default="berlin_dh", show_default=True)
@click.option("--season", type=click.Choice(["onset", "midseason", "conclusion"]), default="onset", show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@out_option
def gen(template: str, season: str, seed: int, out_path: Optional[str]) -> None:
    """Generate a synthetic instance file."""
    if template == "berlin_dh":
        graph, bounds = berlin_graph(ScenarioSpec(season=season, rng_seed=seed))
    else:
        graph, bounds = random_instance(seed)
    _emit(dump_instance(graph, bounds, synthetic=True), out_path)


@main.command()
@out_option
def schema(out_path: Optional[str]) -> None:
    """Print the instance-file JSON schema."""
    _emit(json.dumps(instance_schema(), indent=2, sort_keys=True) + "\n", out_path)


def _human(payload: dict) -> str:
    a, b = payload["sizes"]["a"], payload["sizes"]["b"]
    lines = [f"instance: {payload['instance']}" + (" (synthetic data)" if payload["synthetic"] else ""),
             f"{'':<14}{'Model A':>12}{'Model B':>12}{'reduction':>11}"]
    for key in ("nodes", "arcs", "variables", "constraints"):
        lines.append(f"{key:<14}{a[key]:>12}{b[key]:>12}{payload['reductions'][key]:>10.1%}")
    lines.append("published size relations:")
    for c in payload["published_identities"]:
        lines.append(f"  {c['name']:<20} {c['lhs']} {c['relation']} {c['rhs']}  slack {c['slack']}  "
                     f"{'holds' if c['holds'] else 'FAILS'}")
    lines.append("derived size relations:")
    for c in payload["derived_checks"]:
        lines.append(f"  {c['name']:<24} {'holds' if c['holds'] else 'FAILS'} (slack {c['slack']})")
    sols = payload["solutions"]
    if sols["a"]:
        for m in ("a", "b"):
            lines.append(f"objective vector {m.upper()}: {sols[m]['objective_vector']} ({sols[m]['status']})")
        lines.append(f"objective vectors agree: {str(payload['objective_vectors_agree']).lower()}")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":  # pragma: no cover
    main()
