"""Structured query format and its evaluator."""

from .evaluator import FilterTypeError, evaluate, solve
from .model import (
    RDF_TYPE,
    BindExpr,
    Filter,
    FilterOp,
    Lit,
    MutationReport,
    QueryKind,
    QuerySpec,
    ResultSet,
    SubGraph,
    TriplePattern,
    Var,
)
from .parser import (
    QueryError,
    QuerySyntaxError,
    UnboundVariable,
    UnknownKind,
    parse_query,
    to_document,
)
from .planner import PlanDescription, PlanStep, explain

__all__ = [
    "RDF_TYPE", "BindExpr", "Filter", "FilterOp", "FilterTypeError", "Lit", "MutationReport",
    "PlanDescription", "PlanStep", "QueryError", "QueryKind", "QuerySpec", "QuerySyntaxError",
    "ResultSet", "SubGraph", "TriplePattern", "UnboundVariable", "UnknownKind", "Var",
    "evaluate", "explain", "parse_query", "solve", "to_document",
]
