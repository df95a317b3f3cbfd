"""Temperature-dependent coefficient laws and their hypothesis checks."""
from .expr import BinOp, Call, LawDomainError, LawExpr, LawSyntaxError, Neg, Num, Var, eval_law, parse_law, to_text
from .laws import (
    HypothesisCheck,
    MaterialError,
    MaterialSet,
    ValidationReport,
    builtin_family,
    law_derivative,
    sample_points,
    validate_material,
)

__all__ = [
    "BinOp",
    "Call",
    "Neg",
    "Num",
    "Var",
    "LawDomainError",
    "LawExpr",
    "LawSyntaxError",
    "eval_law",
    "parse_law",
    "to_text",
    "HypothesisCheck",
    "MaterialError",
    "MaterialSet",
    "ValidationReport",
    "builtin_family",
    "law_derivative",
    "sample_points",
    "validate_material",
]
