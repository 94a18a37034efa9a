"""Multi-energy unit commitment in two equivalent graph models."""

from .errors import (
    DomainMismatch,
    InstanceError,
    InvalidCurve,
    MesmixError,
    NameTooLong,
    NotContractible,
    NotMergeable,
    OutOfDomain,
    StageFailure,
    TemplateMismatch,
    TooManyBinaries,
    UnboundedVariable,
)
from .model_a import ModelAGraph, build_model_a, enumerate_port_variables
from .model_b import ModelBGraph, ReductionStep, compose_pwl, contract_balance, flatten, merge_units, replay_log
from .network import NetworkGraph, validate_instance
from .pwl import PiecewiseLinear, pwl_eval, pwl_inverse

__version__ = "0.1.0"

__all__ = [
    "DomainMismatch", "InstanceError", "InvalidCurve", "MesmixError", "ModelAGraph", "ModelBGraph",
    "NameTooLong", "NetworkGraph", "NotContractible", "NotMergeable", "OutOfDomain", "PiecewiseLinear",
    "ReductionStep", "StageFailure", "TemplateMismatch", "TooManyBinaries", "UnboundedVariable",
    "build_model_a", "compose_pwl", "contract_balance", "enumerate_port_variables", "flatten",
    "merge_units", "pwl_eval", "pwl_inverse", "replay_log", "validate_instance",
]
