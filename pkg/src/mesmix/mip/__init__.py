"""MIP representation, compilers, size accounting and text export."""

from .audit import audit_families, check_feasibility
from .compile import compile_graph, compile_model_a, compile_model_b, encode_pwl, var_name
from .export import export_lp, export_mps, mps_name_map, read_lp, read_mps
from .program import (
    CONSTRAINT_FAMILIES,
    FLOW_FAMILIES,
    VARIABLE_FAMILIES,
    LinearConstraint,
    MipProgram,
    MipVariable,
    ProgramBuilder,
)
from .sizes import IdentityCheck, PredictedSize, SizeReport, paired_identities, predict_size, size_report

__all__ = [
    "CONSTRAINT_FAMILIES", "FLOW_FAMILIES", "IdentityCheck", "LinearConstraint", "MipProgram", "MipVariable",
    "PredictedSize", "ProgramBuilder", "SizeReport", "VARIABLE_FAMILIES", "audit_families", "check_feasibility",
    "compile_graph", "compile_model_a", "compile_model_b", "encode_pwl", "export_lp", "export_mps",
    "mps_name_map", "paired_identities", "predict_size", "read_lp", "read_mps", "size_report", "var_name",
]
