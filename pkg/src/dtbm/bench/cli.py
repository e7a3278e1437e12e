"""``dtbm`` command line: generation, RDF import/export, queries and benchmarks."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .. import generator
from ..query import evaluate, explain, parse_query
from ..graph import Graph
from ..rdf import export_ntriples, import_rdf, load_graph
from .harness import run_benchmark
from .workload import workload


def _graph_args(p):
    p.add_argument("--graph", help="N-Triples (.nt) or Turtle (.ttl) file to load")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)


def _source_graph(args) -> Graph:
    if args.graph:
        return load_graph(args.graph)
    return generator.build(generator.GeneratorConfig(scale=args.scale, seed=args.seed))


def _dump(doc, path=None):
    text = json.dumps(doc, indent=1, sort_keys=False)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_gen(args):
    cfg = generator.GeneratorConfig(
        scale=args.scale, seed=args.seed,
        robots_per_scale_unit=args.robots_per_unit or generator.DEFAULT_ROBOTS_PER_SCALE_UNIT,
    )
    g = generator.build(cfg)
    st = generator.stats(g)
    if args.out == "-":
        export_ntriples(g, sys.stdout)
    else:
        export_ntriples(g, args.out)
    if args.stats:
        _dump(st.to_json(), args.stats)
    print(json.dumps(st.to_json()), file=sys.stderr)
    return 0


def cmd_import(args):
    fmt = args.format or ("turtle" if args.file.endswith((".ttl", ".turtle")) else "ntriples")
    g = Graph()
    report = import_rdf(g, args.file, format=fmt)
    doc = {"import": report.to_json(), "stats": generator.stats(g).to_json()}
    _dump(doc, args.report)
    if args.out:
        export_ntriples(g, args.out)
    return 0


def cmd_export(args):
    g = _source_graph(args)
    n = export_ntriples(g, sys.stdout if args.out == "-" else args.out)
    print(json.dumps({"triples": n}), file=sys.stderr)
    return 0


def cmd_query(args):
    text = sys.stdin.read() if args.query == "-" else Path(args.query).read_text(encoding="utf-8")
    spec = parse_query(text, principal=args.principal)
    if args.limit is not None:
        spec = replace(spec, limit=args.limit)
    g = _source_graph(args)
    if args.explain:
        print(explain(spec, g))
        return 0
    _dump(evaluate(spec, g).to_json(), args.out)
    return 0


def cmd_bench(args):
    queries = args.queries.split(",") if args.queries is not None else None
    if queries == [""]:
        queries = []
    graph = load_graph(args.graph) if args.graph else None

    def progress(t):
        mean = "n/a" if t.mean_ms is None else f"{t.mean_ms:.3f} ms"
        print(f"{t.id:>4} {t.archetype:<18} mean {mean}  rows {t.rows}"
              + (f"  ERROR {t.error}" if t.error else ""), file=sys.stderr)

    report = run_benchmark(
        scale=args.scale, seed=args.seed, repetitions=args.reps, limit=args.limit,
        queries=queries, principal=args.principal, warmup=args.warmup, graph=graph,
        progress=progress,
    )
    report.write_json(args.out)
    report.write_csv(args.csv or str(Path(args.out).with_suffix(".csv")))
    return 1 if any(q.error for q in report.queries) else 0


def cmd_export_sparql(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for q in workload():
        (out / f"Q{int(q.id[1:]):02d}.rq").write_text(q.sparql, encoding="utf-8")
    print(json.dumps({"written": len(workload()), "dir": str(out)}), file=sys.stderr)
    return 0


def cmd_calibrate(args):
    if args.target_nodes is None and args.scale not in generator.REFERENCE_SIZES:
        raise ValueError(f"no reference row for scale {args.scale}; pass --target-nodes")
    target = args.target_nodes or generator.REFERENCE_SIZES[args.scale]["nodes"]
    k = generator.calibrate(target_nodes=target, scale=args.scale, seed=args.seed,
                            log=lambda m: print(m, file=sys.stderr))
    g = generator.build(generator.GeneratorConfig(scale=args.scale, seed=args.seed, robots_per_scale_unit=k))
    st = generator.stats(g)
    doc = {"robots_per_scale_unit": k, "stats": st.to_json()}
    if args.scale in generator.REFERENCE_SIZES:
        doc["relative_error"] = generator.relative_errors(st, generator.REFERENCE_SIZES[args.scale])
    _dump(doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dtbm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a DTBM dataset as N-Triples")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    p.add_argument("--stats", help="write DatasetStats JSON here")
    p.add_argument("--robots-per-unit", type=int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("import", help="load an RDF file and report what it contained")
    p.add_argument("file")
    p.add_argument("--format", choices=["ntriples", "turtle"])
    p.add_argument("--report", help="write the import report JSON here")
    p.add_argument("--out", help="re-export the loaded graph as N-Triples")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("export", help="export a graph as N-Triples")
    _graph_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("query", help="run one query document")
    p.add_argument("query", help="YAML/JSON query document, '-' for stdin")
    _graph_args(p)
    p.add_argument("--principal", default="root")
    p.add_argument("--limit", type=int)
    p.add_argument("--explain", action="store_true", help="print the plan instead of running")
    p.add_argument("--out", help="write the result JSON here")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run the workload benchmark")
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--graph", help="benchmark a loaded graph instead of a generated one")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--limit", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--queries", help="comma-separated subset, e.g. Q1,Q10")
    p.add_argument("--principal", default="root")
    p.add_argument("--out", default="report.json")
    p.add_argument("--csv", help="CSV path (default: next to --out)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("workload", help="workload utilities")
    wsub = p.add_subparsers(dest="action", required=True)
    w = wsub.add_parser("export-sparql", help="write Q01.rq..Q12.rq")
    w.add_argument("--out", default="sparql")
    w.set_defaults(func=cmd_export_sparql)

    p = sub.add_parser("calibrate", help="fit robots per scale unit to the reference node count")
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-nodes", type=int)
    p.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
