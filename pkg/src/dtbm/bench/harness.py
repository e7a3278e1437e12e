"""Sequential, single-threaded latency measurement of the DTBM workload.

Each query runs ``warmup`` untimed times and then ``repetitions`` timed times.
The timed region is :func:`evaluate`, result materialisation included. INSERT
queries get a fresh clone of the base graph for every run, so each timing
covers a first execution and the base graph is never mutated.
"""

from __future__ import annotations

import csv
import gc
import json
import platform
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from ..generator import GeneratorConfig, build, stats
from ..query import evaluate
from ..query.model import MutationReport, QueryKind
from .workload import WorkloadQuery, workload


class QueryFailure(RuntimeError):
    def __init__(self, query_id, cause):
        self.query_id = query_id
        self.cause = cause
        super().__init__(f"{query_id} failed: {type(cause).__name__}: {cause}")


@dataclass
class QueryTiming:
    id: str
    archetype: str
    samples_ms: list = field(default_factory=list)
    rows: int = 0
    truncated: bool = False
    limit: Optional[int] = None
    error: Optional[str] = None

    @property
    def reps(self):
        return len(self.samples_ms)

    def _stat(self, fn):
        return float(fn(np.asarray(self.samples_ms))) if self.samples_ms else None

    @property
    def mean_ms(self):
        return self._stat(np.mean)

    @property
    def median_ms(self):
        return self._stat(np.median)

    @property
    def p95_ms(self):
        return self._stat(lambda a: np.percentile(a, 95))

    def to_json(self):
        return {
            "id": self.id,
            "archetype": self.archetype,
            "reps": self.reps,
            "limit": self.limit,
            "mean_ms": self.mean_ms,
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "rows": self.rows,
            "truncated": self.truncated,
            "error": self.error,
            "samples_ms": list(self.samples_ms),
        }


@dataclass
class BenchReport:
    env: dict
    stats: dict
    queries: list = field(default_factory=list)

    def to_json(self):
        return {"env": self.env, "stats": self.stats, "queries": [q.to_json() for q in self.queries]}

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)

    def write_csv(self, path):
        cols = ["id", "archetype", "reps", "limit", "mean_ms", "median_ms", "p95_ms", "rows", "truncated", "error"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for q in self.queries:
                doc = q.to_json()
                w.writerow([doc[c] for c in cols])

    def query(self, qid):
        return next(q for q in self.queries if q.id == qid)


def _row_count(result):
    return result.solutions if isinstance(result, MutationReport) else len(result)


def _timed(fn):
    """Run ``fn`` with the cyclic GC paused, as timeit does; returns (result, ms)."""
    enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = time.perf_counter()
        result = fn()
        elapsed = time.perf_counter() - t0
    finally:
        if enabled:
            gc.enable()
    return result, elapsed * 1000.0


def _prepared(base, query: WorkloadQuery, by_id):
    """Graph a read query runs on: the base graph, or a clone carrying its prerequisites."""
    if not query.requires:
        return base
    g = base.clone()
    for dep in query.requires:
        evaluate(by_id[dep].spec, g)
    return g


def run_query(graph, query: WorkloadQuery, repetitions=500, limit=1000, principal="root",
              warmup=10, by_id=None) -> QueryTiming:
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    spec = replace(query.spec, principal=principal)
    is_insert = spec.kind is QueryKind.INSERT
    if limit is not None and not is_insert:
        spec = replace(spec, limit=limit)
    timing = QueryTiming(query.id, query.archetype.value, limit=None if is_insert else limit)
    by_id = by_id or {q.id: q for q in workload()}
    try:
        target = None if is_insert else _prepared(graph, query, by_id)
        for i in range(warmup + repetitions):
            g = _timed(graph.clone)[0] if is_insert else target
            result, ms = _timed(lambda: evaluate(spec, g))
            if i >= warmup:
                timing.samples_ms.append(ms)
        timing.rows = _row_count(result)
        timing.truncated = bool(result.truncated)
    except Exception as exc:  # recorded per query; the run continues
        timing.error = str(QueryFailure(query.id, exc))
        timing.samples_ms = []
    return timing


def environment(scale, seed, repetitions, limit, warmup) -> dict:
    return {
        "host": platform.node(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": seed,
        "scale": scale,
        "reps": repetitions,
        "limit": limit,
        "warmup": warmup,
        "threads": 1,
        "python": platform.python_version(),
        "machine": platform.machine(),
    }


def run_benchmark(scale=2, seed=42, repetitions=500, limit=1000, queries=None, principal="root",
                  warmup=10, graph=None, progress=None) -> BenchReport:
    """Run the workload (or the ``queries`` subset, ids or objects) against one graph.

    ``graph`` overrides generation from (scale, seed). ``progress`` receives
    each finished :class:`QueryTiming`.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    if graph is None:
        graph = build(GeneratorConfig(scale=scale, seed=seed))
    all_queries = workload()
    by_id = {q.id: q for q in all_queries}
    if queries is None:
        selected = all_queries
    else:
        selected = [by_id[q] if isinstance(q, str) else q for q in queries]
    # the base graph is long-lived; keep the collector from rescanning it
    gc.collect()
    gc.freeze()
    try:
        report = BenchReport(environment(scale, seed, repetitions, limit, warmup), stats(graph).to_json())
        for q in selected:
            timing = run_query(graph, q, repetitions, limit, principal, warmup, by_id)
            report.queries.append(timing)
            if progress:
                progress(timing)
    finally:
        gc.unfreeze()
    return report
