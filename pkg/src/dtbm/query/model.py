from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional, Union

RDF_TYPE = "rdf:type"
VAR_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class QueryKind(enum.Enum):
    SELECT = "select"
    CONSTRUCT = "construct"
    INSERT = "insert"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


@dataclass(frozen=True)
class Lit:
    value: Union[str, int, float, bool]

    def __str__(self):
        return repr(self.value)

    def sort_key(self):
        v = self.value
        if isinstance(v, bool):
            return (1, 0, str(v))
        if isinstance(v, (int, float)):
            return (1, 1, f"{v!r}")
        return (1, 2, v)


Term = Union[Var, Lit, str]  # str is an Iri


def term_str(t) -> str:
    return str(t)


def sort_key(value):
    """Deterministic order across element ids and literals."""
    if isinstance(value, Lit):
        return value.sort_key()
    return (0, 0, value)


@dataclass(frozen=True)
class TriplePattern:
    subject: Term
    predicate: str
    object: Term
    transitive: bool = False

    def variables(self):
        return [t.name for t in (self.subject, self.object) if isinstance(t, Var)]

    def __str__(self):
        p = self.predicate + ("+" if self.transitive else "")
        return f"{self.subject} {p} {self.object}"


@dataclass(frozen=True)
class BindExpr:
    """``target := IRI(concat(parts))``; a part is a literal string or a variable."""

    target: Var
    parts: tuple

    def inputs(self):
        return [p.name for p in self.parts if isinstance(p, Var)]

    def constant(self):
        """The minted IRI of a bind without variable inputs."""
        return "".join(self.parts)

    def __str__(self):
        inner = ", ".join(str(p) if isinstance(p, Var) else repr(p) for p in self.parts)
        return f"BIND(IRI(CONCAT({inner})) AS {self.target})"


class FilterOp(enum.Enum):
    EQ = "="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="


@dataclass(frozen=True)
class Filter:
    var: Var
    op: FilterOp
    value: Term  # Lit or Iri

    def __str__(self):
        return f"FILTER({self.var} {self.op.value} {self.value})"


@dataclass
class QuerySpec:
    kind: QueryKind
    where: list
    binds: list = field(default_factory=list)
    filters: list = field(default_factory=list)
    template: list = field(default_factory=list)
    select: Optional[list] = None
    limit: Optional[int] = None
    principal: str = "root"

    def variables(self) -> list:
        """Variables bound by the where clause and binds, in first-seen order."""
        seen = {}
        for b in self.binds:
            if not b.inputs():
                seen.setdefault(b.target.name, None)
        for pat in self.where:
            for v in pat.variables():
                seen.setdefault(v, None)
        for b in self.binds:
            seen.setdefault(b.target.name, None)
        return list(seen)

    def columns(self) -> list:
        return list(self.select) if self.select is not None else self.variables()


@dataclass
class ResultSet:
    columns: list
    rows: list
    truncated: bool = False

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_json(self):
        def enc(v):
            return {"lit": v.value} if isinstance(v, Lit) else v

        return {
            "columns": self.columns,
            "rows": [[enc(v) for v in row] for row in self.rows],
            "truncated": self.truncated,
        }


@dataclass
class SubGraph:
    """Instantiated CONSTRUCT triples; objects are element ids or :class:`Lit`."""

    triples: list
    truncated: bool = False

    def __len__(self):
        return len(self.triples)

    def nodes(self) -> set:
        out = set()
        for s, _, o in self.triples:
            out.add(s)
            if not isinstance(o, Lit):
                out.add(o)
        return out

    def to_json(self):
        return {
            "triples": [[s, p, {"lit": o.value} if isinstance(o, Lit) else o] for s, p, o in self.triples],
            "truncated": self.truncated,
        }


@dataclass
class MutationReport:
    solutions: int = 0
    created: list = field(default_factory=list)
    types_added: int = 0
    edges_added: int = 0
    properties_set: int = 0
    truncated: bool = False

    def __len__(self):
        return self.solutions

    def to_json(self):
        return {
            "solutions": self.solutions,
            "created": len(self.created),
            "types_added": self.types_added,
            "edges_added": self.edges_added,
            "properties_set": self.properties_set,
            "truncated": self.truncated,
        }
