"""Parse structured (YAML/JSON) query documents into :class:`QuerySpec`.

Document shape::

    kind: select | construct | insert
    where:
      - [subject, predicate, object]    # "?var", "iri", or {lit: value}; "p+" is transitive
      - {as: "?func", iri: "f:some_id"}  # constant bind may sit inline
    bind:
      - {as: "?newout", iri_concat: ["?asset", "_Pred"]}
    filter:
      - ["?x", "=", {lit: 5}]
    select: ["?x"]                      # optional projection (select only)
    template:                           # construct/insert only
      - [subject, predicate, object]
    limit: 1000
"""

from __future__ import annotations

from collections.abc import Mapping

import yaml

from .model import (
    RDF_TYPE,
    VAR_NAME,
    BindExpr,
    Filter,
    FilterOp,
    Lit,
    QueryKind,
    QuerySpec,
    TriplePattern,
    Var,
)

KEYS = {"kind", "where", "bind", "filter", "template", "select", "limit"}
OPS = {
    "=": FilterOp.EQ, "==": FilterOp.EQ,
    "!=": FilterOp.NE, "≠": FilterOp.NE,
    "<": FilterOp.LT,
    "<=": FilterOp.LE, "≤": FilterOp.LE,
    ">": FilterOp.GT,
    ">=": FilterOp.GE, "≥": FilterOp.GE,
}


class QueryError(ValueError):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


class UnboundVariable(QueryError):
    def __init__(self, name, location=None):
        self.name = name
        self.location = location
        where = f"{location}: " if location else ""
        super().__init__(f"{where}variable ?{name} is never bound")


class UnknownKind(QueryError):
    pass


def _term(raw, loc, allow_lit=True):
    if isinstance(raw, Mapping):
        if set(raw) != {"lit"}:
            raise QuerySyntaxError(loc, f"term mappings take exactly one key 'lit', got {sorted(raw)}")
        if not allow_lit:
            raise QuerySyntaxError(loc, "literal not allowed here")
        value = raw["lit"]
        if not isinstance(value, (str, int, float, bool)):
            raise QuerySyntaxError(loc, f"unsupported literal {value!r}")
        return Lit(value)
    if not isinstance(raw, str) or not raw:
        raise QuerySyntaxError(loc, f"expected a term, got {raw!r}")
    if raw.startswith("?"):
        name = raw[1:]
        if not VAR_NAME.match(name):
            raise QuerySyntaxError(loc, f"bad variable name {raw!r}")
        return Var(name)
    return raw


def _var(raw, loc):
    t = _term(raw, loc, allow_lit=False)
    if not isinstance(t, Var):
        raise QuerySyntaxError(loc, f"expected a variable, got {raw!r}")
    return t


def _pattern(raw, loc, allow_transitive=True):
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise QuerySyntaxError(loc, "triple patterns are [subject, predicate, object]")
    s = _term(raw[0], f"{loc}[0]", allow_lit=False)
    p = raw[1]
    if not isinstance(p, str) or not p or p.startswith("?"):
        raise QuerySyntaxError(f"{loc}[1]", f"predicate must be an iri, got {p!r}")
    transitive = p.endswith("+")
    if transitive:
        p = p[:-1]
        if not allow_transitive:
            raise QuerySyntaxError(f"{loc}[1]", "transitive predicates are not allowed here")
        if p == RDF_TYPE:
            raise QuerySyntaxError(f"{loc}[1]", "rdf:type cannot be transitive")
        if not p:
            raise QuerySyntaxError(f"{loc}[1]", "empty predicate")
    o = _term(raw[2], f"{loc}[2]")
    if p == RDF_TYPE and isinstance(o, Lit):
        raise QuerySyntaxError(f"{loc}[2]", "rdf:type object must be a concept or variable")
    return TriplePattern(s, p, o, transitive)


def _bind(raw, loc):
    if not isinstance(raw, Mapping):
        raise QuerySyntaxError(loc, "bind entries are mappings")
    extra = set(raw) - {"as", "iri", "iri_concat"}
    if extra or "as" not in raw or ("iri" in raw) == ("iri_concat" in raw):
        raise QuerySyntaxError(loc, "bind takes 'as' and exactly one of 'iri' / 'iri_concat'")
    target = _var(raw["as"], f"{loc}.as")
    if "iri" in raw:
        parts = [raw["iri"]]
    else:
        parts = raw["iri_concat"]
        if not isinstance(parts, (list, tuple)) or not parts:
            raise QuerySyntaxError(f"{loc}.iri_concat", "expected a non-empty list")
    out = []
    for i, part in enumerate(parts):
        t = _term(part, f"{loc}.iri_concat[{i}]")
        out.append(t.value if isinstance(t, Lit) else t)
        if isinstance(out[-1], (int, float, bool)):
            out[-1] = str(out[-1]).lower() if isinstance(out[-1], bool) else str(out[-1])
    return BindExpr(target, tuple(out))


def _load(text):
    if isinstance(text, Mapping):
        return dict(text)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "document"
        raise QuerySyntaxError(loc, str(getattr(exc, "problem", exc))) from None
    if not isinstance(doc, Mapping):
        raise QuerySyntaxError("document", "query document must be a mapping")
    return dict(doc)


def parse_query(text, principal="root") -> QuerySpec:
    """Validate a query document (text or already-loaded mapping)."""
    doc = _load(text)
    unknown = set(doc) - KEYS
    if unknown:
        raise QuerySyntaxError("document", f"unknown keys {sorted(unknown)}")
    raw_kind = doc.get("kind")
    try:
        kind = QueryKind(str(raw_kind).lower())
    except ValueError:
        raise UnknownKind(f"unknown query kind {raw_kind!r}") from None

    raw_where = doc.get("where")
    if not isinstance(raw_where, list) or not raw_where:
        raise QuerySyntaxError("where", "where must be a non-empty list")
    where, binds = [], []
    for i, item in enumerate(raw_where):
        if isinstance(item, Mapping):
            b = _bind(item, f"where[{i}]")
            if b.inputs():
                raise QuerySyntaxError(f"where[{i}]", "inline binds must be constant")
            binds.append(b)
        else:
            where.append(_pattern(item, f"where[{i}]"))
    if not where:
        raise QuerySyntaxError("where", "where needs at least one triple pattern")

    raw_binds = doc.get("bind") or []
    if not isinstance(raw_binds, list):
        raise QuerySyntaxError("bind", "bind must be a list")
    binds.extend(_bind(b, f"bind[{i}]") for i, b in enumerate(raw_binds))

    bound = {v for pat in where for v in pat.variables()}
    for b in binds:
        if not b.inputs():
            bound.add(b.target.name)
    for i, b in enumerate(binds):
        for name in b.inputs():
            if name not in bound:
                raise UnboundVariable(name, f"bind[{i}]")
        if b.inputs():
            if b.target.name in bound:
                raise QuerySyntaxError(f"bind[{i}]", f"?{b.target.name} is already bound")
            bound.add(b.target.name)

    filters = []
    for i, raw in enumerate(doc.get("filter") or []):
        loc = f"filter[{i}]"
        if not isinstance(raw, (list, tuple)) or len(raw) != 3:
            raise QuerySyntaxError(loc, "filters are [?var, op, value]")
        var = _var(raw[0], f"{loc}[0]")
        if raw[1] not in OPS:
            raise QuerySyntaxError(f"{loc}[1]", f"unknown operator {raw[1]!r}")
        value = _term(raw[2], f"{loc}[2]")
        if isinstance(value, Var):
            raise QuerySyntaxError(f"{loc}[2]", "filters compare against constants")
        if var.name not in bound:
            raise UnboundVariable(var.name, loc)
        filters.append(Filter(var, OPS[raw[1]], value))

    template = []
    raw_template = doc.get("template")
    if kind is QueryKind.SELECT:
        if raw_template:
            raise QuerySyntaxError("template", "select queries take no template")
    else:
        if not isinstance(raw_template, list) or not raw_template:
            raise QuerySyntaxError("template", f"{kind.value} queries need a template")
        for i, raw in enumerate(raw_template):
            pat = _pattern(raw, f"template[{i}]", allow_transitive=False)
            for name in pat.variables():
                if name not in bound:
                    raise UnboundVariable(name, f"template[{i}]")
            template.append(pat)

    select = None
    if doc.get("select") is not None:
        if kind is not QueryKind.SELECT:
            raise QuerySyntaxError("select", "projection applies to select queries only")
        raw_sel = doc["select"]
        if not isinstance(raw_sel, list) or not raw_sel:
            raise QuerySyntaxError("select", "select must be a non-empty list of variables")
        select = []
        for i, raw in enumerate(raw_sel):
            v = _var(raw, f"select[{i}]")
            if v.name not in bound:
                raise UnboundVariable(v.name, f"select[{i}]")
            select.append(v.name)

    limit = doc.get("limit")
    if limit is not None and (isinstance(limit, bool) or not isinstance(limit, int) or limit < 1):
        raise QuerySyntaxError("limit", f"limit must be a positive integer, got {limit!r}")

    return QuerySpec(kind, where, binds, filters, template, select, limit, principal)


def _term_doc(t):
    if isinstance(t, Var):
        return str(t)
    if isinstance(t, Lit):
        return {"lit": t.value}
    return t


def to_document(spec: QuerySpec) -> dict:
    """Inverse of :func:`parse_query` (up to key order)."""
    doc = {"kind": spec.kind.value}
    where = []
    binds = []
    for b in spec.binds:
        entry = {"as": str(b.target),
                 "iri_concat": [str(p) if isinstance(p, Var) else p for p in b.parts]}
        (binds if b.inputs() else where).append(entry)
    where += [[_term_doc(p.subject), p.predicate + ("+" if p.transitive else ""), _term_doc(p.object)]
              for p in spec.where]
    doc["where"] = where
    if binds:
        doc["bind"] = binds
    if spec.filters:
        doc["filter"] = [[str(f.var), f.op.value, _term_doc(f.value)] for f in spec.filters]
    if spec.select is not None:
        doc["select"] = ["?" + v for v in spec.select]
    if spec.template:
        doc["template"] = [[_term_doc(p.subject), p.predicate, _term_doc(p.object)] for p in spec.template]
    if spec.limit is not None:
        doc["limit"] = spec.limit
    return doc
