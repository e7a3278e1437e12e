"""Evaluate a :class:`QuerySpec` against a graph.

Solutions are built pattern by pattern in planner order. ``rdf:type`` holds
through subsumption, ``p+`` through paths of one or more ``p`` edges, and a
predicate naming a property type matches property values (including values
stored under sub-keys). Elements the principal cannot READ do not exist as
far as matching is concerned.
"""

from __future__ import annotations

from ..graph import AccessDenied, Permission, ROOT_PRINCIPAL
from ..graph.store import _value_key
from .model import (
    RDF_TYPE,
    BindExpr,
    FilterOp,
    Lit,
    MutationReport,
    QueryKind,
    QuerySpec,
    ResultSet,
    SubGraph,
    Var,
    sort_key,
)
from .parser import QueryError
from .planner import Context, pattern_kind, plan


class FilterTypeError(QueryError):
    pass


def _resolve(term, sol):
    if isinstance(term, Var):
        return sol.get(term.name)
    return term


def _match_type(ctx, pat, sols):
    g = ctx.graph
    out = []
    s_var = pat.subject.name if isinstance(pat.subject, Var) else None
    o_var = pat.object.name if isinstance(pat.object, Var) else None
    for sol in sols:
        s = _resolve(pat.subject, sol)
        o = _resolve(pat.object, sol)
        if s is not None:
            if isinstance(s, Lit) or s not in g._types or not ctx.ok(s):
                continue
            closure = ctx.closure(s)
            if o is not None:
                if o in closure:
                    out.append(sol)
            else:
                for c in sorted(closure):
                    new = dict(sol)
                    new[o_var] = c
                    out.append(new)
        elif o is not None:
            if isinstance(o, Lit) or o not in g._concepts or not ctx.ok(o):
                continue
            for i in ctx.extent(o):
                new = dict(sol)
                new[s_var] = i
                out.append(new)
        else:
            for i in sorted(g._types):
                if not ctx.ok(i):
                    continue
                for c in sorted(ctx.closure(i)):
                    new = dict(sol)
                    new[s_var] = i
                    if o_var == s_var:
                        continue
                    new[o_var] = c
                    out.append(new)
    return out


def _match_edge(ctx, pat, sols):
    g = ctx.graph
    p = pat.predicate
    out = []
    s_var = pat.subject.name if isinstance(pat.subject, Var) else None
    o_var = pat.object.name if isinstance(pat.object, Var) else None
    for sol in sols:
        s = _resolve(pat.subject, sol)
        o = _resolve(pat.object, sol)
        if isinstance(s, Lit) or isinstance(o, Lit):
            continue
        if s is not None and not ctx.ok(s) or o is not None and not ctx.ok(o):
            continue
        if s is not None and o is not None:
            if (s, p, o) in g._eid:
                out.append(sol)
        elif s is not None:
            for x in g._out.get((s, p), ()):
                if ctx.ok(x):
                    new = dict(sol)
                    new[o_var] = x
                    out.append(new)
        elif o is not None:
            for x in g._in.get((o, p), ()):
                if ctx.ok(x):
                    new = dict(sol)
                    new[s_var] = x
                    out.append(new)
        else:
            for (a, pp), objs in g._out.items():
                if pp != p or not ctx.ok(a):
                    continue
                for b in objs:
                    if not ctx.ok(b):
                        continue
                    if s_var == o_var:
                        if a == b:
                            new = dict(sol)
                            new[s_var] = a
                            out.append(new)
                        continue
                    new = dict(sol)
                    new[s_var] = a
                    new[o_var] = b
                    out.append(new)
    return out


def _match_path(ctx, pat, sols):
    g = ctx.graph
    p = pat.predicate
    out = []
    s_var = pat.subject.name if isinstance(pat.subject, Var) else None
    o_var = pat.object.name if isinstance(pat.object, Var) else None
    for sol in sols:
        s = _resolve(pat.subject, sol)
        o = _resolve(pat.object, sol)
        if isinstance(s, Lit) or isinstance(o, Lit):
            continue
        if s is not None and (not g.is_node(s) or not ctx.ok(s)):
            continue
        if o is not None and (not g.is_node(o) or not ctx.ok(o)):
            continue
        if s is not None and o is not None:
            if ctx.reaches(s, p, o):
                out.append(sol)
        elif s is not None:
            for x in ctx.forward(s, p):
                new = dict(sol)
                new[o_var] = x
                out.append(new)
        elif o is not None:
            for x in ctx.reverse(o, p):
                new = dict(sol)
                new[s_var] = x
                out.append(new)
        else:
            starts = sorted({a for (a, pp) in g._out if pp == p})
            for a in starts:
                if not ctx.ok(a):
                    continue
                for b in ctx.forward(a, p):
                    if s_var == o_var:
                        if a == b:
                            new = dict(sol)
                            new[s_var] = a
                            out.append(new)
                        continue
                    new = dict(sol)
                    new[s_var] = a
                    new[o_var] = b
                    out.append(new)
    return out


def _owner_values(g, owner, keys):
    props = g._props.get(owner)
    if not props:
        return []
    seen = {}
    for k in keys:
        if k in props:
            v = props[k]
            seen.setdefault(_value_key(v), v)
    return list(seen.values())


def _match_property(ctx, pat, sols):
    g = ctx.graph
    keys = g.property_subkeys(pat.predicate)
    out = []
    s_var = pat.subject.name if isinstance(pat.subject, Var) else None
    o_var = pat.object.name if isinstance(pat.object, Var) else None
    for sol in sols:
        s = _resolve(pat.subject, sol)
        o = _resolve(pat.object, sol)
        if isinstance(s, Lit):
            continue
        if o is not None and not isinstance(o, Lit):
            continue  # an element never equals a property value
        if s is not None:
            if not ctx.ok(s):
                continue
            for v in _owner_values(g, s, keys):
                if o is not None:
                    if _value_key(v) == _value_key(o.value):
                        out.append(sol)
                        break
                else:
                    new = dict(sol)
                    new[o_var] = Lit(v)
                    out.append(new)
        elif o is not None:
            owners = set()
            for k in keys:
                owners |= g._by_value.get((k, _value_key(o.value)), set())
            for x in sorted(owners):
                if ctx.ok(x):
                    new = dict(sol)
                    new[s_var] = x
                    out.append(new)
        elif s_var == o_var:
            continue  # ?x key ?x: an element is never its own property value
        else:
            owners = set()
            for k in keys:
                owners |= g._by_key.get(k, set())
            for x in sorted(owners):
                if not ctx.ok(x):
                    continue
                for v in _owner_values(g, x, keys):
                    new = dict(sol)
                    new[s_var] = x
                    new[o_var] = Lit(v)
                    out.append(new)
    return out


_MATCHERS = {
    "type": _match_type,
    "edge": _match_edge,
    "path": _match_path,
    "property": _match_property,
}


def _bind_value(b: BindExpr, sol):
    parts = []
    for part in b.parts:
        if isinstance(part, Var):
            v = sol.get(part.name)
            if v is None:
                return None
            parts.append(str(v.value) if isinstance(v, Lit) else v)
        else:
            parts.append(part)
    return "".join(parts)


def _apply_bind(ctx, b: BindExpr, sols):
    out = []
    name = b.target.name
    for sol in sols:
        value = _bind_value(b, sol)
        if value is None:
            continue
        prior = sol.get(name)
        if prior is not None:
            if prior == value:
                out.append(sol)
            continue
        new = dict(sol)
        new[name] = value
        out.append(new)
    return out


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _compare(left, op: FilterOp, right) -> bool:
    l_lit, r_lit = isinstance(left, Lit), isinstance(right, Lit)
    lv = left.value if l_lit else left
    rv = right.value if r_lit else right
    if op in (FilterOp.EQ, FilterOp.NE):
        if l_lit != r_lit:
            equal = False
        elif _is_number(lv) and _is_number(rv):
            equal = lv == rv
        else:
            equal = _value_key(lv) == _value_key(rv)
        return equal if op is FilterOp.EQ else not equal
    if _is_number(lv) and _is_number(rv):
        pass
    elif isinstance(lv, str) and isinstance(rv, str) and l_lit == r_lit:
        pass
    else:
        raise FilterTypeError(f"cannot order {left!s} against {right!s}")
    if op is FilterOp.LT:
        return lv < rv
    if op is FilterOp.LE:
        return lv <= rv
    if op is FilterOp.GT:
        return lv > rv
    return lv >= rv


def solve(ctx: Context, spec: QuerySpec, bindings=None) -> list:
    """All solutions (dicts var -> element id | Lit), unordered."""
    pre = {}
    for k, v in (bindings or {}).items():
        pre[k.lstrip("?")] = v
    for v in pre.values():
        if not isinstance(v, Lit) and not ctx.ok(v):
            return []
    steps = plan(ctx, spec, tuple(pre))
    sols = [pre]
    bound = set(pre)
    pending_filters = list(spec.filters)
    for step in steps.steps:
        item = step.item
        if isinstance(item, BindExpr):
            sols = _apply_bind(ctx, item, sols)
            bound.add(item.target.name)
        else:
            for term in (item.subject, item.object):
                if not isinstance(term, (Var, Lit)) and not ctx.ok(term):
                    return []
            kind = pattern_kind(ctx.graph, item)
            if kind == "none":
                return []
            sols = _MATCHERS[kind](ctx, item, sols)
            bound.update(item.variables())
        ready = [f for f in pending_filters if f.var.name in bound]
        for f in ready:
            pending_filters.remove(f)
            sols = [s for s in sols if _compare(s[f.var.name], f.op, f.value)]
        if not sols:
            return []
    return sols


def _ordered(sols, columns):
    return sorted(sols, key=lambda s: tuple(sort_key(s.get(c, "")) for c in columns))


def _select(ctx, spec, bindings):
    sols = solve(ctx, spec, bindings)
    columns = spec.columns()
    rows = [tuple(s.get(c) for c in columns) for s in sols]
    if spec.select is not None:
        rows = list(dict.fromkeys(rows))
    rows.sort(key=lambda r: tuple(sort_key(v) for v in r))
    truncated = False
    if spec.limit is not None and len(rows) > spec.limit:
        rows = rows[: spec.limit]
        truncated = True
    return ResultSet(columns, rows, truncated)


def _limited_solutions(ctx, spec, bindings):
    sols = solve(ctx, spec, bindings)
    truncated = False
    if spec.limit is not None and len(sols) > spec.limit:
        sols = _ordered(sols, spec.variables())[: spec.limit]
        truncated = True
    return sols, truncated


def _instantiate(spec, sols):
    triples = []
    for sol in sols:
        for pat in spec.template:
            s = _resolve(pat.subject, sol)
            o = _resolve(pat.object, sol)
            if s is None or o is None or isinstance(s, Lit):
                continue
            triples.append((s, pat.predicate, o))
    return triples


def _construct(ctx, spec, bindings):
    sols, truncated = _limited_solutions(ctx, spec, bindings)
    triples = list(dict.fromkeys(_instantiate(spec, sols)))
    triples.sort(key=lambda t: (t[0], t[1], sort_key(t[2])))
    return SubGraph(triples, truncated)


def _insert(ctx, spec, bindings):
    g = ctx.graph
    sols, truncated = _limited_solutions(ctx, spec, bindings)
    sols = _ordered(sols, spec.variables())
    triples = list(dict.fromkeys(_instantiate(spec, sols)))

    new_types = {}
    edges, props = [], []
    for s, p, o in triples:
        if p == RDF_TYPE:
            if isinstance(o, Lit) or o not in g._concepts:
                raise QueryError(f"cannot type {s!r} as {o!r}: not a concept")
            new_types.setdefault(s, []).append(o)
        elif p in g._predicates:
            if isinstance(o, Lit):
                raise QueryError(f"{p!r} is an edge predicate but got literal {o}")
            edges.append((s, p, o))
        elif p in g._ptypes:
            if not isinstance(o, Lit):
                raise QueryError(f"{p!r} is a property type but got element {o!r}")
            props.append((s, p, o.value))
        else:
            raise QueryError(f"unknown predicate or property type {p!r}")

    for s in new_types:
        if g.is_concept(s):
            raise QueryError(f"cannot add rdf:type to concept {s!r}")
    for s, _, o in edges:
        for n in (s, o):
            if not g.is_node(n) and n not in new_types:
                raise QueryError(f"template creates untyped element {n!r}")
    for s, _, _ in props:
        if not g.is_node(s) and s not in new_types:
            raise QueryError(f"template creates untyped element {s!r}")

    principal = spec.principal
    if principal != ROOT_PRINCIPAL and g.has_acl():
        touched = set(new_types) | {s for s, _, _ in edges} | {s for s, _, _ in props}
        for n in sorted(touched):
            if g.is_node(n) and not g._allowed(n, principal, Permission.WRITE):
                raise AccessDenied(n, principal, Permission.WRITE)

    report = MutationReport(solutions=len(sols), truncated=truncated)
    with g.batch():
        for s, types in new_types.items():
            if g.is_instance(s):
                report.types_added += len(g.add_types(s, types))
            else:
                g.add_instance(s, types)
                report.created.append(s)
        for s, p, o in edges:
            if (s, p, o) not in g._eid:
                g.add_edge(s, p, o)
                report.edges_added += 1
        for s, k, v in props:
            current = g._props.get(s, {})
            if k not in current or _value_key(current[k]) != _value_key(v):
                g.set_property(s, k, v)
                report.properties_set += 1
    return report


def evaluate(spec: QuerySpec, graph, bindings=None, principal=None):
    """Run a query: SELECT -> ResultSet, CONSTRUCT -> SubGraph, INSERT -> MutationReport.

    ``bindings`` pre-binds variables (name -> element id or Lit).
    """
    if principal is not None and principal != spec.principal:
        from dataclasses import replace

        spec = replace(spec, principal=principal)
    if spec.kind is QueryKind.INSERT:
        with graph.lock.write():
            return _insert(Context(graph, spec.principal), spec, bindings)
    with graph.lock.read():
        ctx = Context(graph, spec.principal)
        if spec.kind is QueryKind.SELECT:
            return _select(ctx, spec, bindings)
        return _construct(ctx, spec, bindings)
