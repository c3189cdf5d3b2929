"""Scalar fields on the Heisenberg group: grammar, catalog and derivative jets."""

from .catalog import CATALOG, catalog_field, support_box, v0_field
from .expr import BinOp, Const, FieldExpr, Func, Neg, Pow, Var, to_text
from .finite_diff import fd_jet3, jet_agreement
from .jets import Jet3, eval_jet3, eval_values
from .parser import parse_field
from .point import HPoint, as_points, sample_points

__all__ = [
    "CATALOG",
    "BinOp",
    "Const",
    "FieldExpr",
    "Func",
    "HPoint",
    "Jet3",
    "Neg",
    "Pow",
    "Var",
    "as_points",
    "catalog_field",
    "eval_jet3",
    "eval_values",
    "fd_jet3",
    "jet_agreement",
    "parse_field",
    "sample_points",
    "support_box",
    "to_text",
    "v0_field",
]
