"""DTBM workload, benchmark harness and command line."""

from .harness import BenchReport, QueryFailure, QueryTiming, run_benchmark, run_query
from .workload import Archetype, Targets, WorkloadQuery, query, to_sparql, workload

__all__ = [
    "Archetype",
    "BenchReport",
    "QueryFailure",
    "QueryTiming",
    "Targets",
    "WorkloadQuery",
    "query",
    "run_benchmark",
    "run_query",
    "to_sparql",
    "workload",
]
