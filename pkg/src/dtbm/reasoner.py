"""Traversal-based RDFS+ reasoning.

Nothing here is materialized: subsumption and transitive predicates are
answered by walking the live indexes of the graph, so taxonomy edits never
leave stale inferences behind.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .graph import Graph, UnknownConcept, UnknownElement

log = logging.getLogger(__name__)

DEFAULT_CASCADE_LIMIT = 16


class Direction(enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class TransitiveQueryPlan:
    start: frozenset
    predicate: str
    direction: Direction = Direction.FORWARD
    max_hops: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "start", frozenset(self.start))
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


def reach(graph: Graph, start, predicate, forward=True, visible=None, max_hops=None) -> set:
    """Nodes reachable from ``start`` over one or more ``predicate`` edges.

    ``visible`` optionally hides nodes: hidden nodes are neither returned nor
    walked through.
    """
    index = graph._out if forward else graph._in
    seen = set()
    frontier = [start]
    hops = 0
    while frontier and (max_hops is None or hops < max_hops):
        hops += 1
        nxt = []
        for node in frontier:
            for n in index.get((node, predicate), ()):
                if n in seen:
                    continue
                if visible is not None and not visible(n):
                    continue
                seen.add(n)
                nxt.append(n)
        frontier = nxt
    return seen


def reaches(graph: Graph, subject, predicate, object, visible=None) -> bool:
    """Is there a path of >= 1 ``predicate`` edges from subject to object?

    Searches backwards from ``object`` with early exit; containment
    hierarchies fan out downwards, so the reverse search is the narrow one.
    """
    index = graph._in
    seen = set()
    frontier = [object]
    while frontier:
        nxt = []
        for node in frontier:
            for n in index.get((node, predicate), ()):
                if n == subject:
                    return True
                if n in seen:
                    continue
                if visible is not None and not visible(n):
                    continue
                seen.add(n)
                nxt.append(n)
        frontier = nxt
    return False


def transitive_reach(graph: Graph, plan: TransitiveQueryPlan, visible=None) -> set:
    with graph.lock.read():
        graph.predicate(plan.predicate)
        for s in plan.start:
            if not graph.is_node(s):
                raise UnknownElement(s)
        forward = plan.direction is Direction.FORWARD
        out = set()
        for s in plan.start:
            out |= reach(graph, s, plan.predicate, forward, visible, plan.max_hops)
        return out


def type_closure(graph: Graph, instance) -> set:
    """Every concept the instance belongs to, by walking parent links."""
    with graph.lock.read():
        if not graph.is_instance(instance):
            raise UnknownElement(instance)
        out = set()
        stack = list(graph._types[instance])
        while stack:
            c = stack.pop()
            if c not in out:
                out.add(c)
                stack.extend(graph._parents[c])
        return out


@dataclass
class EventRule:
    """Run ``action`` (an INSERT query) whenever an instance of ``trigger`` is added.

    ``variable`` names the action's distinguished variable, pre-bound to the
    new instance.
    """

    rule_id: str
    trigger: str
    action: object  # QuerySpec
    variable: str
    enabled: bool = True


@dataclass
class RuleFiring:
    rule_id: str
    instance: str
    depth: int
    report: object = None  # MutationReport
    error: Optional[Exception] = None

    @property
    def ok(self):
        return self.error is None


class CascadeDepthExceeded(RuntimeError):
    def __init__(self, limit, firings):
        self.limit = limit
        self.firings = firings
        super().__init__(f"event rule cascade exceeded depth {limit}")


class Reasoner:
    """Event-based reasoning bound to one graph.

    Attaching the reasoner subscribes it to instance additions; each new
    instance is matched against the registered rules by subsumption.
    """

    def __init__(self, graph: Graph, cascade_limit=DEFAULT_CASCADE_LIMIT, attach=True):
        self.graph = graph
        self.cascade_limit = cascade_limit
        self.rules: dict = {}
        self.firings: list = []
        self._firing = False
        if attach:
            graph.add_listener(self._on_added)
            graph.add_dependency_provider(self)

    # graph dependency provider protocol
    def dependents(self, ids) -> set:
        return {f"rule:{r.rule_id}" for r in self.rules.values() if r.trigger in ids}

    def drop(self, ids):
        for rid in [r.rule_id for r in self.rules.values() if r.trigger in ids]:
            del self.rules[rid]

    def transitive_reach(self, plan: TransitiveQueryPlan, visible=None) -> set:
        return transitive_reach(self.graph, plan, visible)

    def type_closure(self, instance) -> set:
        return type_closure(self.graph, instance)

    def register_event_rule(self, rule: EventRule):
        from .query.model import QueryKind

        if rule.rule_id in self.rules:
            raise ValueError(f"duplicate rule id {rule.rule_id!r}")
        if not self.graph.is_concept(rule.trigger):
            raise UnknownConcept(rule.trigger)
        if rule.action.kind is not QueryKind.INSERT:
            raise ValueError("event rule actions must be INSERT queries")
        var = rule.variable.lstrip("?")
        if var not in rule.action.variables():
            raise ValueError(f"action does not use ?{var}")
        rule.variable = var
        self.rules[rule.rule_id] = rule

    def set_enabled(self, rule_id, enabled=True):
        self.rules[rule_id].enabled = enabled

    def _matching(self, instance):
        closure = type_closure(self.graph, instance)
        return [r for r in self.rules.values() if r.enabled and r.trigger in closure]

    def _on_added(self, instance):
        if self._firing:
            return
        self.on_instance_added(instance)

    def on_instance_added(self, instance) -> list:
        """Fire matching rules for a new instance, then for whatever those rules create.

        Cascades are processed breadth-first. A rule whose action fails is
        recorded on its firing; it does not abort anything else.
        """
        from .query.evaluator import evaluate

        firings = []
        queue = deque([(instance, 0)])
        self._firing = True
        try:
            with self.graph.lock.write():
                while queue:
                    inst, depth = queue.popleft()
                    if not self.graph.is_instance(inst):
                        continue
                    for rule in self._matching(inst):
                        if depth >= self.cascade_limit:
                            self.firings.extend(firings)
                            raise CascadeDepthExceeded(self.cascade_limit, firings)
                        firing = RuleFiring(rule.rule_id, inst, depth)
                        try:
                            firing.report = evaluate(
                                rule.action, self.graph, bindings={rule.variable: inst}
                            )
                        except Exception as exc:  # rule failures are reported, not raised
                            log.warning("rule %s failed on %s: %s", rule.rule_id, inst, exc)
                            firing.error = exc
                        firings.append(firing)
                        if firing.report is not None:
                            for new in sorted(firing.report.created):
                                queue.append((new, depth + 1))
        finally:
            self._firing = False
        self.firings.extend(firings)
        return firings
