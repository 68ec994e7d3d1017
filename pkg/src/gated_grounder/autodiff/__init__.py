"""Reverse-mode differentiation, Adam and gradient checking."""

from gated_grounder.autodiff.adam import AdamState, adam_step
from gated_grounder.autodiff.gradcheck import GradCheckReport, grad_check, grad_check_op
from gated_grounder.autodiff.params import SCHEMA_VERSION, ParameterStore, ParamSpec
from gated_grounder.autodiff.tape import Tape, Var, backward

__all__ = [
    "AdamState",
    "adam_step",
    "GradCheckReport",
    "grad_check",
    "grad_check_op",
    "SCHEMA_VERSION",
    "ParameterStore",
    "ParamSpec",
    "Tape",
    "Var",
    "backward",
]
