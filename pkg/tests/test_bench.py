import csv
import json

import numpy as np
import pytest

from dtbm.bench import Archetype, Targets, query, run_benchmark, run_query, workload
from dtbm.bench.cli import main
from dtbm.bench.harness import BenchReport, QueryTiming
from dtbm.generator import GeneratorConfig, build
from dtbm.query import MutationReport, evaluate
from dtbm.rdf import to_ntriples

MINI = Targets(factory="f:fac", line="f:line", robot="f:robot", joint="f:robot_joint_1",
               robot_type="f:Robot_Type1")


# -- workload ------------------------------------------------------------------

def test_workload_shape():
    qs = workload()
    assert [q.id for q in qs] == [f"Q{i}" for i in range(1, 13)]
    assert {q.archetype for q in qs} == set(Archetype)
    assert [q.archetype for q in qs[8:]] == [Archetype.AI_CONFIG] * 3 + [Archetype.SUBGRAPH_FETCH]
    assert query("Q12").requires == ("Q10",)
    with pytest.raises(KeyError):
        query("Q13")


@pytest.mark.parametrize("scale", [1, 2, 5])
def test_workload_runs_on_every_scale(scale):
    g = build(GeneratorConfig(scale=scale, seed=scale))
    for q in workload():
        result = evaluate(q.spec, g)
        if q.id in ("Q9", "Q10", "Q11"):
            assert result.solutions > 0, q.id
        else:
            assert len(result) > 0, q.id


def test_q6_path_on_depth_one_line(mini):
    for n in ("f:fac", "f:line", "f:robot", "f:robot_joint_1"):
        mini.set_property(n, "dt:assetId", n[2:])
    rows = evaluate(query("Q6", MINI).spec, mini)
    path = sorted(rows.column("node")) + ["f:robot_joint_1"]
    assert path == ["f:fac", "f:line", "f:robot", "f:robot_joint_1"]


def test_q10_on_three_powered_assets(mini):
    mini.add_instance("f:robot2", ["f:Robot_Type2"])
    mini.add_instance("f:robot2_power", ["f:Data_Power"])
    mini.add_edge("f:line", "dt:hasPart", "f:robot2")
    mini.add_edge("f:robot2", "dt:hasSeries", "f:robot2_power")
    report = evaluate(query("Q10", MINI).spec, mini)
    assert isinstance(report, MutationReport) and report.solutions == 3
    funcs = sorted(mini.all_instances("dt:Function"))
    assert funcs == ["f:belt_Func", "f:robot2_Func", "f:robot_Func"]
    for f in funcs:
        assert len(mini.objects(f, "dt:hasInputData")) == 2
        assert len(mini.objects(f, "dt:hasOutputData")) == 1

    sub = evaluate(query("Q12", MINI).spec, mini)
    assert len(sub) >= 5
    assert ("f:robot_Func", "rdf:type", "dt:Function") in sub.triples


def test_q9_and_q11_aggregate(s1_copy):
    g = s1_copy
    evaluate(query("Q11").spec, g)
    for t in g.children_of("f:Robot"):
        f = f"{t}_AggFunc"
        powered = {d for r in g.all_instances(t) for d in g.objects(r, "dt:hasSeries")
                   if g.is_instance_of(d, "f:Data_Power")}
        assert g.objects(f, "dt:hasInputData") == powered
    evaluate(query("Q9").spec, g)
    line_func = "f:factory1_line_1_AggFunc"
    assert g.is_instance_of(line_func, "dt:Function")
    assert "f:factory1_line_1_robot_1_power" in g.objects(line_func, "dt:hasInputData")


def test_sparql_rendering():
    q10 = query("Q10").sparql
    assert "INSERT {" in q10 and "?loc dt:hasPart+ ?asset ." in q10
    assert 'BIND(IRI(CONCAT(STR(?asset), "_Pred")) AS ?newout)' in q10
    assert "LIMIT" not in q10
    assert "BIND(f:factory1_line_1_robot_1_Func AS ?func)" in query("Q12").sparql


# -- report arithmetic ---------------------------------------------------------

def test_timing_statistics():
    t = QueryTiming("Q1", "UI-LOOKUP", samples_ms=[4.0, 1.0, 2.0, 3.0, 10.0])
    assert t.reps == 5
    assert t.mean_ms == pytest.approx(4.0)
    assert t.median_ms == pytest.approx(3.0)
    assert t.p95_ms == pytest.approx(np.percentile([1, 2, 3, 4, 10], 95))
    empty = QueryTiming("Q1", "UI-LOOKUP")
    assert empty.mean_ms is None and empty.reps == 0


@pytest.fixture(scope="module")
def small_report(s1):
    base = s1.clone()
    before = to_ntriples(base)
    report = run_benchmark(graph=base, repetitions=3, warmup=1, limit=5)
    return report, before, base


def test_report_is_recomputable(small_report):
    report, _, _ = small_report
    assert [q.id for q in report.queries] == [f"Q{i}" for i in range(1, 13)]
    for q in report.to_json()["queries"]:
        samples = q["samples_ms"]
        assert q["reps"] == len(samples) == 3
        assert q["error"] is None
        assert min(samples) <= q["mean_ms"] <= max(samples)
        assert q["mean_ms"] == pytest.approx(np.mean(samples))
        assert q["median_ms"] == pytest.approx(np.median(samples))
        assert q["p95_ms"] == pytest.approx(np.percentile(samples, 95))
        assert all(s >= 0 for s in samples)


def test_limit_and_truncation(small_report):
    report, _, _ = small_report
    q3 = report.query("Q3")
    assert q3.rows == 5 and q3.truncated and q3.limit == 5
    q12 = report.query("Q12")
    assert q12.rows > 0 and not q12.truncated
    # INSERT queries run unlimited on fresh clones
    q10 = report.query("Q10")
    assert q10.limit is None and not q10.truncated and q10.rows > 5


def test_base_graph_untouched(small_report):
    _, before, base = small_report
    assert to_ntriples(base) == before


def test_report_envelope(small_report, tmp_path):
    report, _, _ = small_report
    env = report.env
    assert {"host", "timestamp", "seed", "scale", "reps", "limit"} <= set(env)
    assert env["threads"] == 1
    assert report.stats["nodes"] > 0
    report.write_json(tmp_path / "r.json")
    report.write_csv(tmp_path / "r.csv")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert len(doc["queries"]) == 12
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert [r["id"] for r in rows] == [q.id for q in report.queries]


def test_empty_subset(s1):
    report = run_benchmark(graph=s1, repetitions=1, queries=[])
    assert report.queries == [] and report.to_json()["queries"] == []
    assert isinstance(report, BenchReport)


def test_failures_are_recorded(mini):
    t = run_query(mini, query("Q10"), repetitions=1, warmup=0)
    assert t.error is None and t.rows == 2
    broken = query("Q1")
    object.__setattr__(broken, "document", {"kind": "select", "where": [["?x", "rdf:type", "C"]],
                                            "filter": [["?x", "<", {"lit": 1}]]})
    mini.add_concept("C")
    mini.add_instance("c1", ["C"])
    t = run_query(mini, broken, repetitions=2, warmup=0)
    assert t.error and "FilterTypeError" in t.error and t.samples_ms == []


def test_argument_validation(s1):
    with pytest.raises(ValueError):
        run_benchmark(graph=s1, repetitions=0)
    with pytest.raises(ValueError):
        run_benchmark(graph=s1, warmup=-1)


# -- command line --------------------------------------------------------------

def test_cli_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.nt", tmp_path / "b.nt"
    for out in (a, b):
        assert main(["gen", "--scale", "1", "--seed", "42", "--robots-per-unit", "30", "--out", str(out),
                     "--stats", str(tmp_path / "s.json")]) == 0
    assert a.read_bytes() == b.read_bytes()
    stats = json.loads((tmp_path / "s.json").read_text())
    assert set(stats) == {"triples", "nodes", "edges", "props"}
    assert stats["triples"] == len(a.read_text().splitlines())


def test_cli_import_export_query(tmp_path, capsys):
    nt = tmp_path / "g.nt"
    main(["gen", "--scale", "1", "--robots-per-unit", "20", "--out", str(nt)])
    capsys.readouterr()
    assert main(["import", str(nt), "--report", str(tmp_path / "imp.json")]) == 0
    imp = json.loads((tmp_path / "imp.json").read_text())
    assert imp["import"]["triples"] == imp["stats"]["triples"]

    qdoc = tmp_path / "q.yaml"
    qdoc.write_text('kind: select\nwhere:\n  - ["?r", "rdf:type", "f:Robot"]\nlimit: 3\n')
    assert main(["query", str(qdoc), "--graph", str(nt), "--out", str(tmp_path / "res.json")]) == 0
    res = json.loads((tmp_path / "res.json").read_text())
    assert len(res["rows"]) == 3 and res["truncated"]
    assert main(["query", str(qdoc), "--graph", str(nt), "--explain"]) == 0
    assert "rdf:type" in capsys.readouterr().out

    assert main(["export", "--graph", str(nt), "--out", str(tmp_path / "again.nt")]) == 0
    assert (tmp_path / "again.nt").read_bytes() == nt.read_bytes()


def test_cli_bench(tmp_path, capsys):
    nt = tmp_path / "g.nt"
    main(["gen", "--scale", "1", "--robots-per-unit", "20", "--out", str(nt)])
    out = tmp_path / "report.json"
    code = main(["bench", "--graph", str(nt), "--reps", "2", "--warmup", "0", "--queries", "Q1,Q10",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert [q["id"] for q in doc["queries"]] == ["Q1", "Q10"]
    assert out.with_suffix(".csv").exists()


def test_cli_export_sparql(tmp_path):
    assert main(["workload", "export-sparql", "--out", str(tmp_path / "rq")]) == 0
    files = sorted(p.name for p in (tmp_path / "rq").iterdir())
    assert files == [f"Q{i:02d}.rq" for i in range(1, 13)]


def test_cli_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["bench", "--no-such-flag"])
    assert err.value.code == 2
    assert "usage" in capsys.readouterr().err
    with pytest.raises(SystemExit) as err:
        main(["gen"])
    assert err.value.code == 2
    capsys.readouterr()
    assert main(["import", str(tmp_path / "missing.nt")]) == 1
    err_doc = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert set(err_doc) == {"error", "message"}
    bad = tmp_path / "bad.nt"
    bad.write_text("<a> <b> .\n")
    assert main(["import", str(bad)]) == 1
    assert "ParseError" in capsys.readouterr().err
    assert main(["bench", "--queries", "Q99", "--reps", "1"]) == 1
