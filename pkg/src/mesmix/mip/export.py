"""MPS (fixed format) and LP text export, plus the readers used for round trips.

Fixed MPS limits names to 8 characters.  When any name is longer, all rows
and columns are written under short positional codes (``R0000001``,
``C0000001``) and :func:`mps_name_map` gives the sidecar mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..errors import NameTooLong
from .program import LinearConstraint, MipProgram, MipVariable, combine

MPS_NAME_WIDTH = 8
_SENSE_MPS = {"=": "E", "<=": "L", ">=": "G"}
_MPS_SENSE = {v: k for k, v in _SENSE_MPS.items()}


def fmt_number(x: float, width: int = 12) -> str:
    """Shortest ``%g`` rendering of ``x`` that fits the MPS value field."""
    if x == int(x) and abs(x) < 1e11:
        return str(int(x))
    for digits in range(15, 0, -1):
        text = f"{x:.{digits}g}"
        if len(text) <= width:
            return text
    raise ValueError(f"cannot format {x}")


def _columns(program: MipProgram) -> list[MipVariable]:
    return sorted(program.variables, key=lambda v: v.name)


def _needs_codes(program: MipProgram) -> bool:
    names = [v.name for v in program.variables] + [_row_name(i) for i in range(program.m)]
    return any(len(n) > MPS_NAME_WIDTH or " " in n for n in names)


def _row_name(i: int) -> str:
    return f"R{i + 1:07d}"


def mps_name_map(program: MipProgram) -> dict[str, dict[str, str]]:
    """Sidecar mapping from MPS codes back to canonical names (empty when unused)."""
    if not _needs_codes(program):
        return {}
    cols = {f"C{i + 1:07d}": v.name for i, v in enumerate(_columns(program))}
    rows = {_row_name(i): f"{c.family}:{c.origin}:{c.t}" for i, c in enumerate(program.constraints)}
    return {"columns": cols, "rows": rows}


def _line(*fields: str) -> str:
    # fixed MPS field starts: 2, 5, 15, 25, 40, 50 (1-based)
    starts = (1, 4, 14, 24, 39, 49)
    out = ""
    for start, text in zip(starts, fields):
        if not text:
            continue
        out = out.ljust(start) + text
    return out.rstrip()


def export_mps(program: MipProgram, strict: bool = False) -> bytes:
    if strict and _needs_codes(program):
        raise NameTooLong(f"names longer than {MPS_NAME_WIDTH} characters; use the sidecar mapping")
    cols = _columns(program)
    codes = _needs_codes(program)
    col_code = {v.name: (f"C{i + 1:07d}" if codes else v.name) for i, v in enumerate(cols)}
    row_code = [_row_name(i) for i in range(program.m)]

    lines = [f"NAME          {program.name[:MPS_NAME_WIDTH] or 'MESMIX'}"]
    for k, label in ((1, "f2"), (2, "f3")):
        lines.append(f"* objective {label} (minimize after f1 in lexicographic order)")
        for name, coef in program.objectives[k]:
            lines.append(f"*   {col_code[name]} {fmt_number(coef)}")
    lines.append("ROWS")
    lines.append(_line("N", "OBJ"))
    for code, con in zip(row_code, program.constraints):
        lines.append(_line(_SENSE_MPS[con.sense], code))

    entries: dict[str, list[tuple[str, float]]] = {v.name: [] for v in cols}
    for name, coef in program.objectives[0]:
        entries[name].append(("OBJ", coef))
    for code, con in zip(row_code, program.constraints):
        for name, coef in con.terms:
            entries[name].append((code, coef))

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for v in cols:
        if v.binary != in_int:
            kind = "'INTORG'" if v.binary else "'INTEND'"
            lines.append(_line("", f"M{marker:07d}", "'MARKER'", "", kind))
            marker += 1
            in_int = v.binary
        items = entries[v.name] or [("OBJ", 0.0)]
        for row, coef in items:
            lines.append(_line("", col_code[v.name], row, fmt_number(coef)))
    if in_int:
        lines.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))

    lines.append("RHS")
    for code, con in zip(row_code, program.constraints):
        if con.rhs != 0:
            lines.append(_line("", "RHS", code, fmt_number(con.rhs)))

    lines.append("BOUNDS")
    for v in cols:
        c = col_code[v.name]
        if v.binary:
            lines.append(_line("BV", "BND", c))
            continue
        if v.lo == v.hi:
            lines.append(_line("FX", "BND", c, fmt_number(v.lo)))
            continue
        if v.lo != 0:
            lines.append(_line("LO", "BND", c, fmt_number(v.lo)) if math.isfinite(v.lo) else _line("MI", "BND", c))
        if math.isfinite(v.hi):
            lines.append(_line("UP", "BND", c, fmt_number(v.hi)))
    lines.append("ENDATA")
    return ("\n".join(lines) + "\n").encode("ascii")


@dataclass
class ParsedProgram:
    """Text-level view of an imported model; enough for round-trip checks."""

    name: str = ""
    variables: dict[str, list] = field(default_factory=dict)  # name -> [lo, hi, binary]
    rows: dict[str, list] = field(default_factory=dict)  # name -> [sense, {var: coef}, rhs]
    objective: dict[str, float] = field(default_factory=dict)
    comment_objectives: list[dict[str, float]] = field(default_factory=list)

    def to_program(self) -> MipProgram:
        variables = tuple(MipVariable(n, "binary" if b else "continuous", b, lo, hi)
                          for n, (lo, hi, b) in self.variables.items())
        constraints = tuple(LinearConstraint(combine(terms.items()), sense, rhs, "imported", row)
                            for row, (sense, terms, rhs) in self.rows.items())
        objs = [combine(self.objective.items())]
        objs += [combine(o.items()) for o in self.comment_objectives[:2]]
        while len(objs) < 3:
            objs.append(())
        return MipProgram(variables, constraints, tuple(objs), self.name)  # type: ignore[arg-type]


def read_mps(data: bytes) -> ParsedProgram:
    out = ParsedProgram()
    section = None
    in_int = False
    objective_row = None
    for raw in data.decode("ascii").splitlines():
        if not raw.strip():
            continue
        if raw.startswith("*"):
            text = raw[1:].strip()
            if text.startswith("objective"):
                out.comment_objectives.append({})
            elif out.comment_objectives and text:
                name, value = text.split()
                out.comment_objectives[-1][name] = float(value)
            continue
        if not raw[0].isspace():
            parts = raw.split()
            section = parts[0]
            if section == "NAME" and len(parts) > 1:
                out.name = parts[1]
            continue
        parts = raw.split()
        if section == "ROWS":
            sense, row = parts
            if sense == "N":
                objective_row = row
            else:
                out.rows[row] = [_MPS_SENSE[sense], {}, 0.0]
        elif section == "COLUMNS":
            if len(parts) >= 3 and parts[1] == "'MARKER'":
                in_int = parts[2] == "'INTORG'"
                continue
            col = parts[0]
            if col not in out.variables:
                out.variables[col] = [0.0, math.inf, in_int]
            for row, value in zip(parts[1::2], parts[2::2]):
                coef = float(value)
                if row == objective_row:
                    if coef:
                        out.objective[col] = coef
                else:
                    out.rows[row][1][col] = coef
        elif section == "RHS":
            for row, value in zip(parts[1::2], parts[2::2]):
                out.rows[row][2] = float(value)
        elif section == "BOUNDS":
            kind, col = parts[0], parts[2]
            var = out.variables[col]
            value = float(parts[3]) if len(parts) > 3 else None
            if kind == "BV":
                var[:] = [0.0, 1.0, True]
            elif kind == "UP":
                var[1] = value
            elif kind == "LO":
                var[0] = value
            elif kind == "FX":
                var[0] = var[1] = value
            elif kind == "MI":
                var[0] = -math.inf
    return out


# --------------------------------------------------------------------------
# LP format

_LP_WIDTH = 200


def _lp_expr(terms, first_prefix: str = " ") -> list[str]:
    pieces = []
    for i, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = fmt_number(abs(coef), 24)
        body = name if mag == "1" else f"{mag} {name}"
        pieces.append(f"{'- ' if sign == '-' else ('' if i == 0 else '+ ')}{body}")
    lines, current = [], first_prefix
    for p in pieces:
        if len(current) + len(p) + 1 > _LP_WIDTH and current.strip():
            lines.append(current.rstrip())
            current = "   "
        current += p + " "
    lines.append(current.rstrip())
    return lines


LP_SLASH = "~"


def export_lp(program: MipProgram) -> bytes:
    lines = [f"\\ {program.name}"]
    for k, label in ((1, "f2"), (2, "f3")):
        lines.append(f"\\ objective {label}:")
        for name, coef in program.objectives[k]:
            lines.append(f"\\   {name} {fmt_number(coef, 24)}")
    lines.append("Minimize")
    obj = list(program.objectives[0]) or [(sorted(v.name for v in program.variables)[0], 0.0)] if program.variables else []
    lines += _lp_expr(obj, " f1: ") if obj else [" f1:"]
    lines.append("Subject To")
    for i, con in enumerate(program.constraints):
        terms = list(con.terms) or [(program.variables[0].name, 0.0)]
        body = _lp_expr(terms, f" {_row_name(i)}: ")
        body[-1] += f" {con.sense} {fmt_number(con.rhs, 24)}"
        lines += body
    lines.append("Bounds")
    for v in sorted(program.variables, key=lambda v: v.name):
        if v.binary:
            continue
        hi = fmt_number(v.hi, 24) if math.isfinite(v.hi) else "+inf"
        lo = fmt_number(v.lo, 24) if math.isfinite(v.lo) else "-inf"
        lines.append(f" {lo} <= {v.name} <= {hi}")
    binaries = sorted(v.name for v in program.variables if v.binary)
    if binaries:
        lines.append("Binary")
        lines += [f" {b}" for b in binaries]
    lines.append("End")
    # common LP readers treat "/" as an operator; ids never contain "~", so the swap is reversible
    return ("\n".join(lines) + "\n").replace("/", LP_SLASH).encode("ascii")


def _parse_terms(tokens: list[str]) -> dict[str, float]:
    terms: dict[str, float] = {}
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        terms[tok] = terms.get(tok, 0.0) + sign * (1.0 if coef is None else coef)
        sign, coef = 1.0, None
    return terms


def read_lp(data: bytes) -> ParsedProgram:
    out = ParsedProgram()
    section = None
    statements: list[tuple[str, str]] = []
    buffer = ""
    comment_obj: Optional[dict] = None
    for raw in data.decode("ascii").replace(LP_SLASH, "/").splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            text = line[1:].strip()
            if text.startswith("objective"):
                comment_obj = {}
                out.comment_objectives.append(comment_obj)
            elif comment_obj is not None and text:
                name, value = text.split()
                comment_obj[name] = float(value)
            elif not out.name:
                out.name = text
            continue
        lowered = line.lower()
        if lowered in ("minimize", "subject to", "bounds", "binary", "end"):
            if buffer:
                statements.append((section, buffer))
                buffer = ""
            section = lowered
            continue
        if section in ("minimize", "subject to"):
            if ":" in line and buffer:
                statements.append((section, buffer))
                buffer = ""
            buffer += " " + line
        else:
            statements.append((section, line))
    for section, text in statements:
        if section == "minimize":
            _, expr = text.split(":", 1)
            out.objective = {k: v for k, v in _parse_terms(expr.split()).items() if v}
        elif section == "subject to":
            row, expr = text.split(":", 1)
            tokens = expr.split()
            op = next(i for i, tok in enumerate(tokens) if tok in ("<=", ">=", "="))
            terms = {k: v for k, v in _parse_terms(tokens[:op]).items() if v}
            out.rows[row.strip()] = [tokens[op], terms, float(tokens[op + 1])]
        elif section == "bounds":
            lo, _, name, _, hi = text.split()
            out.variables[name] = [float(lo), float(hi), False]
        elif section == "binary":
            out.variables[text] = [0.0, 1.0, True]
    return out
