"""Semantic property graph engine and the Digital Twin Benchmark Model (DTBM)."""

from .graph import Graph, Permission
from .query import evaluate, explain, parse_query
from .reasoner import Reasoner

__version__ = "0.1.0"

__all__ = ["Graph", "Permission", "Reasoner", "evaluate", "explain", "parse_query"]
