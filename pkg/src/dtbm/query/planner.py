"""Greedy most-selective-first ordering of triple patterns."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..reasoner import reach
from .model import RDF_TYPE, Lit, QuerySpec, TriplePattern, Var


class Context:
    """Per-evaluation caches over one graph for one principal."""

    def __init__(self, graph, principal):
        self.graph = graph
        self.visible = graph.visibility(principal)
        self._closures = {}
        self._extents = {}
        self._forward = {}
        self._reverse = {}
        self._checks = {}
        self._sizes = {}

    def ok(self, node):
        return self.visible is None or self.visible(node)

    def closure(self, instance):
        c = self._closures.get(instance)
        if c is None:
            g = self.graph
            c = set()
            stack = list(g._types[instance])
            while stack:
                x = stack.pop()
                if x not in c:
                    c.add(x)
                    stack.extend(g._parents[x])
            if self.visible is not None:
                c = {x for x in c if self.visible(x)}
            self._closures[instance] = c
        return c

    def extent(self, concept):
        """Visible instances of a concept, subsumption included, in sorted order."""
        e = self._extents.get(concept)
        if e is None:
            g = self.graph
            found = set(g._inst_of[concept])
            stack = list(g._children[concept])
            seen = set()
            while stack:
                c = stack.pop()
                if c in seen:
                    continue
                seen.add(c)
                found |= g._inst_of[c]
                stack.extend(g._children[c])
            if self.visible is not None:
                found = {i for i in found if self.visible(i)}
            e = sorted(found)
            self._extents[concept] = e
        return e

    def extent_size(self, concept):
        """Instance count of a concept's extent, without sorting or visibility checks."""
        n = self._sizes.get(concept)
        if n is None:
            if concept in self._extents:
                n = len(self._extents[concept])
            else:
                g = self.graph
                n = 0
                for c in {concept} | g._descendants_unlocked(concept):
                    n += len(g._inst_of[c])
            self._sizes[concept] = n
        return n

    def forward(self, node, predicate):
        key = (node, predicate)
        r = self._forward.get(key)
        if r is None:
            r = reach(self.graph, node, predicate, True, self.visible)
            self._forward[key] = r
        return r

    def reverse(self, node, predicate):
        key = (node, predicate)
        r = self._reverse.get(key)
        if r is None:
            r = reach(self.graph, node, predicate, False, self.visible)
            self._reverse[key] = r
        return r

    def reaches(self, s, predicate, o):
        key = (s, predicate)
        fwd = self._forward.get(key)
        if fwd is not None:
            return o in fwd
        rev = self._reverse.get((o, predicate))
        if rev is not None:
            return s in rev
        # a subject checked over and over is cheaper to expand once
        n = self._checks.get(key, 0) + 1
        self._checks[key] = n
        if n > 4:
            return o in self.forward(s, predicate)
        from ..reasoner import reaches

        return reaches(self.graph, s, predicate, o, self.visible)


def pattern_kind(graph, pat: TriplePattern) -> str:
    if pat.predicate == RDF_TYPE:
        return "type"
    if pat.predicate in graph._predicates:
        return "path" if pat.transitive else "edge"
    if pat.predicate in graph._ptypes and not pat.transitive:
        return "property"
    return "none"


def _is_bound(term, bound):
    return not isinstance(term, Var) or term.name in bound


def estimate(ctx: Context, pat: TriplePattern, bound) -> float:
    """Expected matches per incoming solution, given the variables already bound."""
    g = ctx.graph
    kind = pattern_kind(g, pat)
    s_b = _is_bound(pat.subject, bound)
    o_b = _is_bound(pat.object, bound)
    s_const = not isinstance(pat.subject, Var)
    o_const = not isinstance(pat.object, Var)
    if kind == "none":
        return 0.0
    if kind == "type":
        if s_b and o_b:
            return 0.5
        if s_b:
            return 3.0
        if o_const:
            return float(ctx.extent_size(pat.object)) if g.is_concept(pat.object) else 0.0
        if o_b:
            return max(1.0, len(g._types) / max(1, len(g._concepts)))
        return 3.0 * len(g._types)
    if kind == "property":
        keys = g.property_subkeys(pat.predicate)
        n = sum(len(g._by_key.get(k, ())) for k in keys)
        if s_b:
            return 0.5 if o_b else 1.0
        if o_const and isinstance(pat.object, Lit):
            from ..graph.store import _value_key

            return float(sum(len(g._by_value.get((k, _value_key(pat.object.value)), ())) for k in keys))
        if o_b:
            return 1.0
        return float(n)
    edges, subjects, objects = g.predicate_stats(pat.predicate)
    if edges == 0:
        return 0.0
    fan_out = edges / max(1, subjects)
    fan_in = edges / max(1, objects)
    if kind == "edge":
        if s_b and o_b:
            return 0.5
        if s_const:
            return float(len(g._out.get((pat.subject, pat.predicate), ())))
        if o_const:
            return float(len(g._in.get((pat.object, pat.predicate), ())))
        if s_b:
            return fan_out
        if o_b:
            return fan_in
        return float(edges)
    # transitive path
    if s_b and o_b:
        return 0.5
    if s_const:
        return float(len(ctx.forward(pat.subject, pat.predicate)))
    if o_const:
        return float(len(ctx.reverse(pat.object, pat.predicate)))
    if s_b:
        return min(float(objects), fan_out + fan_out ** 2 + fan_out ** 3)
    if o_b:
        return min(float(subjects), fan_in + fan_in ** 2 + fan_in ** 3)
    return float(edges) * 3.0


@dataclass
class PlanStep:
    item: object  # TriplePattern | BindExpr
    fan_out: float
    rows: float

    def __str__(self):
        return f"{self.item}    (fan-out ~{self.fan_out:.1f}, rows ~{self.rows:.0f})"


@dataclass
class PlanDescription:
    steps: list = field(default_factory=list)
    pre_bound: list = field(default_factory=list)

    @property
    def patterns(self):
        return [s.item for s in self.steps if isinstance(s.item, TriplePattern)]

    def __str__(self):
        lines = []
        if self.pre_bound:
            lines.append("pre-bound: " + ", ".join("?" + v for v in self.pre_bound))
        for i, step in enumerate(self.steps, 1):
            lines.append(f"{i}. {step}")
        return "\n".join(lines)


DOMAIN_CAP = 64


def _known(term, domains):
    """Exact candidate values for a term, when they are small enough to track."""
    if not isinstance(term, Var):
        return [term]
    return domains.get(term.name)


def _expand(ctx, pat, values, forward):
    """All values reachable from ``values`` through one pattern (exact)."""
    g = ctx.graph
    kind = pattern_kind(g, pat)
    out = []
    for v in values:
        if isinstance(v, Lit) or not g.is_node(v):
            continue
        if kind == "type":
            out.extend(ctx.closure(v) if forward and v in g._types else ())
        elif kind == "edge":
            out.extend(g._out.get((v, pat.predicate), ()) if forward else g._in.get((v, pat.predicate), ()))
        elif kind == "path":
            out.extend(ctx.forward(v, pat.predicate) if forward else ctx.reverse(v, pat.predicate))
    return out


def _greedy(ctx, spec, pre_bound, first=None):
    bound = set(pre_bound)
    domains = {}
    steps = []
    rows = 1.0
    cost = 0.0
    pending_binds = list(spec.binds)

    def flush_binds():
        progress = True
        while progress:
            progress = False
            for b in list(pending_binds):
                if all(v in bound for v in b.inputs()):
                    steps.append(PlanStep(b, 1.0, rows))
                    bound.add(b.target.name)
                    if not b.inputs():
                        domains[b.target.name] = [b.constant()]
                    pending_binds.remove(b)
                    progress = True

    flush_binds()
    remaining = list(spec.where)
    picked = 0
    while remaining:
        best = None
        for idx, pat in enumerate(remaining):
            if first is not None and picked == 0 and pat is not first:
                continue
            est, dom = _estimate_exact(ctx, pat, bound, domains)
            connected = any(v in bound for v in pat.variables()) or not pat.variables()
            key = (est, not connected, idx)
            if best is None or key < best[0]:
                best = (key, pat, est, dom)
        _, pat, est, dom = best
        remaining.remove(pat)
        picked += 1
        rows *= est
        cost += rows
        steps.append(PlanStep(pat, est, rows))
        new_vars = [v for v in pat.variables() if v not in bound]
        bound.update(pat.variables())
        if dom is not None and len(new_vars) == 1:
            domains[new_vars[0]] = dom
        flush_binds()
    return steps, cost


def _estimate_exact(ctx, pat, bound, domains):
    """Estimate as :func:`estimate`, exact when one side has a small known domain.

    Also returns the new variable's value set when that stays small.
    """
    s_b = _is_bound(pat.subject, bound)
    o_b = _is_bound(pat.object, bound)
    kind = pattern_kind(ctx.graph, pat)
    # concept extents are sized by estimate() without materialising them
    if s_b != o_b and (kind in ("edge", "path") or kind == "type" and s_b):
        side = pat.subject if s_b else pat.object
        values = _known(side, domains)
        if values is not None and len(values) <= DOMAIN_CAP:
            found = _expand(ctx, pat, values, forward=s_b)
            est = len(found) / max(1, len(values))
            uniq = set(found)
            return est, sorted(uniq) if len(uniq) <= DOMAIN_CAP else None
    est = estimate(ctx, pat, bound)
    if (kind == "type" and not s_b and not isinstance(pat.object, Var)
            and 0 < est <= DOMAIN_CAP):
        return est, list(ctx.extent(pat.object))
    return est, None


def plan(ctx: Context, spec: QuerySpec, pre_bound=()) -> PlanDescription:
    """Greedy most-selective-first ordering, tried from every starting pattern.

    The candidate with the lowest total of estimated intermediate rows wins.
    """
    candidates = [None] if len(spec.where) <= 1 else spec.where
    best = None
    for first in candidates:
        steps, cost = _greedy(ctx, spec, pre_bound, first)
        if best is None or cost < best[1]:
            best = (steps, cost)
    return PlanDescription(steps=best[0], pre_bound=sorted(pre_bound))


def explain(spec: QuerySpec, graph, bindings=None) -> PlanDescription:
    with graph.lock.read():
        ctx = Context(graph, spec.principal)
        return plan(ctx, spec, tuple((bindings or {}).keys()))
