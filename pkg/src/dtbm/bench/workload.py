"""The 12-query DTBM workload.

Q9-Q12 follow the published AI-configuration queries. Q1-Q8 are a
reconstruction spanning the query archetypes the benchmark describes
(UI lookups, subsumption listings, hierarchy collection, belt traversal);
they are not the original texts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..query import parse_query
from ..query.model import BindExpr, Lit, QueryKind, QuerySpec, Var
from ..rdf import PREFIXES, format_literal


class Archetype(str, enum.Enum):
    UI_LOOKUP = "UI-LOOKUP"
    SUBSUMPTION_LIST = "SUBSUMPTION-LIST"
    TRANSITIVE_COLLECT = "TRANSITIVE-COLLECT"
    HORIZONTAL = "HORIZONTAL"
    AI_CONFIG = "AI-CONFIG"
    SUBGRAPH_FETCH = "SUBGRAPH-FETCH"


@dataclass(frozen=True)
class Targets:
    """Elements the parameterised queries point at; present in every seeded graph."""

    factory: str = "f:factory1"
    line: str = "f:factory1_line_1"
    robot: str = "f:factory1_line_1_robot_1"
    joint: str = "f:factory1_line_1_robot_1_joint_1"
    robot_type: str = "f:Robot_Type1"

    @property
    def function(self):
        return self.robot + "_Func"


@dataclass(frozen=True)
class WorkloadQuery:
    id: str
    archetype: Archetype
    document: dict
    title: str = ""
    requires: tuple = ()  # queries whose output this one reads

    @property
    def spec(self) -> QuerySpec:
        return parse_query(self.document)

    @property
    def sparql(self) -> str:
        return to_sparql(self.spec)


def _docs(t: Targets) -> list:
    return [
        ("Q1", Archetype.UI_LOOKUP, "asset by id with its data keys", {
            "kind": "select",
            "where": [
                ["?asset", "dt:assetId", {"lit": t.robot.split(":", 1)[1]}],
                ["?asset", "rdf:type", "dt:Asset"],
                ["?asset", "dt:hasSeries", "?data"],
                ["?data", "dt:hasDataKey", "?key"],
            ],
        }),
        ("Q2", Archetype.TRANSITIVE_COLLECT, "all assets under a line", {
            "kind": "select",
            "where": [
                [t.line, "dt:hasPart+", "?asset"],
                ["?asset", "rdf:type", "dt:Asset"],
            ],
        }),
        ("Q3", Archetype.SUBSUMPTION_LIST, "power series in the factory with data keys", {
            "kind": "select",
            "where": [
                [t.factory, "dt:hasPart+", "?asset"],
                ["?asset", "dt:hasSeries", "?series"],
                ["?series", "rdf:type", "f:Data_Power"],
                ["?series", "dt:hasDataKey", "?key"],
            ],
        }),
        ("Q4", Archetype.TRANSITIVE_COLLECT, "all data attached to a robot's parts", {
            "kind": "select",
            "where": [
                [t.robot, "dt:hasPart+", "?part"],
                ["?part", "dt:hasSeries", "?data"],
                ["?data", "rdf:type", "dt:Data"],
            ],
        }),
        ("Q5", Archetype.SUBSUMPTION_LIST, "locations holding a robot type variant", {
            "kind": "select",
            "where": [
                ["?robot", "rdf:type", t.robot_type],
                ["?loc", "dt:hasPart+", "?robot"],
                ["?loc", "rdf:type", "dt:Location"],
            ],
            "select": ["?loc"],
        }),
        ("Q6", Archetype.TRANSITIVE_COLLECT, "containment path from the factory to a joint", {
            "kind": "select",
            "where": [
                ["?node", "dt:hasPart+", t.joint],
                ["?node", "dt:assetId", "?id"],
            ],
        }),
        ("Q7", Archetype.HORIZONTAL, "assets downstream of a robot along belts", {
            "kind": "select",
            "where": [
                [t.robot, "dt:connectsTo+", "?next"],
                ["?next", "rdf:type", "dt:Asset"],
            ],
        }),
        ("Q8", Archetype.SUBSUMPTION_LIST, "data keys under a line by data concept", {
            "kind": "select",
            "where": [
                [t.line, "dt:hasPart+", "?asset"],
                ["?asset", "dt:hasSeries", "?data"],
                ["?data", "rdf:type", "?concept"],
                ["?data", "dt:hasDataKey", "?key"],
            ],
            "select": ["?concept", "?data", "?key"],
        }),
        ("Q9", Archetype.AI_CONFIG, "aggregate power across each location hierarchy", {
            "kind": "insert",
            "where": [
                ["?loc", "rdf:type", "dt:Location"],
                ["?loc", "dt:hasPart+", "?asset"],
                ["?asset", "dt:hasSeries", "?input"],
                ["?input", "rdf:type", "f:Data_Power"],
            ],
            "bind": [
                {"as": "?newout", "iri_concat": ["?loc", "_AggPred"]},
                {"as": "?newfunc", "iri_concat": ["?loc", "_AggFunc"]},
            ],
            "template": [
                ["?newfunc", "rdf:type", "dt:Function"],
                ["?newfunc", "dt:hasInputData", "?input"],
                ["?newfunc", "dt:hasOutputData", "?newout"],
                ["?newout", "rdf:type", "dt:Data_Series_Numeric"],
                ["?newout", "dt:hasDataKeySeries", {"lit": "TBD"}],
            ],
        }),
        ("Q10", Archetype.AI_CONFIG, "configure a power prediction function per asset", {
            "kind": "insert",
            "where": [
                ["?loc", "rdf:type", "dt:Location"],
                ["?loc", "dt:hasSeries", "?weather"],
                ["?weather", "rdf:type", "f:Data_Weather"],
                ["?loc", "dt:hasPart+", "?asset"],
                ["?asset", "rdf:type", "dt:Asset"],
                ["?asset", "dt:hasSeries", "?input"],
                ["?input", "rdf:type", "f:Data_Power"],
            ],
            "bind": [
                {"as": "?newout", "iri_concat": ["?asset", "_Pred"]},
                {"as": "?newfunc", "iri_concat": ["?asset", "_Func"]},
            ],
            "template": [
                ["?newfunc", "rdf:type", "dt:Function"],
                ["?newfunc", "dt:hasInputData", "?weather"],
                ["?newfunc", "dt:hasInputData", "?input"],
                ["?newfunc", "dt:hasOutputData", "?newout"],
                ["?newout", "rdf:type", "f:Data_Power_Pred"],
                ["?newout", "dt:hasDataKeySeries", {"lit": "TBD"}],
            ],
        }),
        ("Q11", Archetype.AI_CONFIG, "aggregate power per robot type", {
            "kind": "insert",
            "where": [
                ["?asset", "rdf:type", "f:Robot"],
                ["?asset", "rdf:type", "?type"],
                ["?asset", "dt:hasSeries", "?input"],
                ["?input", "rdf:type", "f:Data_Power"],
            ],
            "filter": [
                ["?type", "!=", "f:Robot"],
                ["?type", "!=", "dt:Asset"],
            ],
            "bind": [
                {"as": "?newout", "iri_concat": ["?type", "_AggPred"]},
                {"as": "?newfunc", "iri_concat": ["?type", "_AggFunc"]},
            ],
            "template": [
                ["?newfunc", "rdf:type", "dt:Function"],
                ["?newfunc", "dt:hasInputData", "?input"],
                ["?newfunc", "dt:hasOutputData", "?newout"],
                ["?newout", "rdf:type", "dt:Data_Series_Numeric"],
                ["?newout", "dt:hasDataKeySeries", {"lit": "TBD"}],
            ],
        }),
        ("Q12", Archetype.SUBGRAPH_FETCH, "sub-graph of one function configuration", {
            "kind": "construct",
            "where": [
                {"as": "?func", "iri": t.function},
                ["?func", "rdf:type", "dt:Function"],
                ["?func", "rdf:type", "?functype"],
                ["?func", "dt:hasInputData", "?input"],
                ["?input", "dt:hasDataKey", "?input_key"],
                ["?func", "dt:hasOutputData", "?output"],
                ["?output", "dt:hasDataKey", "?output_key"],
            ],
            "template": [
                ["?func", "rdf:type", "?functype"],
                ["?func", "dt:hasInputData", "?input"],
                ["?input", "dt:hasDataKey", "?input_key"],
                ["?func", "dt:hasOutputData", "?output"],
                ["?output", "dt:hasDataKey", "?output_key"],
            ],
        }),
    ]


# Q12 fetches the configuration Q10 creates.
REQUIRES = {"Q12": ("Q10",)}


def workload(targets: Targets = Targets()) -> list:
    return [
        WorkloadQuery(qid, arch, doc, title, REQUIRES.get(qid, ()))
        for qid, arch, title, doc in _docs(targets)
    ]


def query(qid: str, targets: Targets = Targets()) -> WorkloadQuery:
    for q in workload(targets):
        if q.id == qid:
            return q
    raise KeyError(qid)


# SPARQL rendering, for loading the same workload into an external store

def _sparql_term(t):
    if isinstance(t, Var):
        return str(t)
    if isinstance(t, Lit):
        return format_literal(t.value)
    if t == "rdf:type":
        return "a"
    return t


def _sparql_bind(b: BindExpr) -> str:
    if not b.inputs():
        return f"BIND({b.parts[0]} AS {b.target})"
    parts = ", ".join(f"STR({p})" if isinstance(p, Var) else format_literal(str(p)) for p in b.parts)
    return f"BIND(IRI(CONCAT({parts})) AS {b.target})"


def _triple(p) -> str:
    pred = _sparql_term(p.predicate) + ("+" if getattr(p, "transitive", False) else "")
    return f"  {_sparql_term(p.subject)} {pred} {_sparql_term(p.object)} ."


def to_sparql(spec: QuerySpec) -> str:
    lines = [f"PREFIX {k}: <{v}>" for k, v in sorted(PREFIXES.items())]
    body = [f"  {_sparql_bind(b)} ." for b in spec.binds if not b.inputs()]
    body += [_triple(p) for p in spec.where]
    body += [f"  {_sparql_bind(b)} ." for b in spec.binds if b.inputs()]
    for f in spec.filters:
        body.append(f"  FILTER({f.var} {f.op.value} {_sparql_term(f.value)})")
    if spec.kind is QueryKind.SELECT:
        cols = " ".join("?" + c for c in spec.columns())
        lines.append(f"SELECT DISTINCT {cols}" if spec.select is not None else f"SELECT {cols}")
    elif spec.kind is QueryKind.CONSTRUCT:
        lines.append("CONSTRUCT {")
        lines += [_triple(p) for p in spec.template]
        lines.append("}")
    else:
        lines.append("INSERT {")
        lines += [_triple(p) for p in spec.template]
        lines.append("}")
    lines.append("WHERE {")
    lines += body
    lines.append("}")
    if spec.limit is not None and spec.kind is not QueryKind.INSERT:
        lines.append(f"LIMIT {spec.limit}")
    return "\n".join(lines) + "\n"
