"""In-memory semantic property multigraph.

Nodes are concepts and instances. Concepts form a subsumption DAG; instances
point at one or more concepts; edges connect any two nodes through a
registered predicate; properties hang key/value pairs off nodes. Every
mutation keeps referential integrity, so nothing can dangle.
"""

from __future__ import annotations

import enum
import itertools
import json
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

from .errors import (
    AmbiguousInheritance,
    CycleDetected,
    DuplicateId,
    EmptyTypes,
    HasDependents,
    InvalidValue,
    UnknownConcept,
    UnknownElement,
    UnknownParent,
    UnknownPredicate,
    UnknownPropertyType,
)
from .locking import RWLock

Value = Union[str, int, float, bool]
EdgeId = int

ROOT_PRINCIPAL = "root"


class Permission(enum.IntEnum):
    READ = 1
    WRITE = 2


@dataclass(frozen=True)
class Concept:
    id: str
    parents: frozenset
    label: Optional[str] = None
    auto: bool = False


@dataclass(frozen=True)
class Instance:
    id: str
    types: frozenset


@dataclass(frozen=True)
class PredicateType:
    id: str
    transitive: bool = False


@dataclass(frozen=True)
class PropertyType:
    id: str
    parent: Optional[str] = None


@dataclass(frozen=True)
class Edge:
    id: EdgeId
    subject: str
    predicate: str
    object: str


@dataclass(frozen=True)
class DeletionReport:
    elements: frozenset = frozenset()
    edges: frozenset = frozenset()
    properties: int = 0
    rules: frozenset = frozenset()

    def __len__(self):
        return len(self.elements) + len(self.edges)


def _check_value(owner, value):
    if isinstance(value, (str, bool, int, float)):
        return
    raise InvalidValue(owner, f"property values must be str/int/float/bool, got {type(value).__name__}")


def _value_key(value):
    # 1 == True hashes equal; keep booleans apart from integers.
    return (type(value) is bool, value)


class Graph:
    """The semantic property graph.

    Reads may run concurrently; writes are exclusive (see ``lock``). Public
    methods take the lock themselves, so callers only need it to group
    several calls into one consistent view.
    """

    def __init__(self):
        self.lock = RWLock()
        # concept id -> label; parentsOf/childrenOf form the TaxonomyIndex
        self._concepts: dict = {}
        self._auto: set = set()
        self._parents: dict = {}
        self._children: dict = {}
        self._inst_of: dict = {}
        self._types: dict = {}
        self._predicates: dict = {}
        self._ptypes: dict = {}
        self._ptype_children: dict = {}
        self._edges: dict = {}
        self._eid: dict = {}
        self._out: dict = {}
        self._in: dict = {}
        self._pred_edges: dict = {}
        self._props: dict = {}
        self._by_key: dict = {}
        self._by_value: dict = {}
        self._acl: dict = {}
        self._next_edge = itertools.count(1)
        self._listeners: list = []
        self._dependency_providers: list = []
        self._batch_depth = 0
        self._pending: list = []

    # -- lookup -----------------------------------------------------------

    def kind(self, id) -> Optional[str]:
        if id in self._types:
            return "instance"
        if id in self._concepts:
            return "concept"
        if id in self._predicates:
            return "predicate"
        if id in self._ptypes:
            return "property"
        return None

    def __contains__(self, id):
        return self.kind(id) is not None

    def is_node(self, id) -> bool:
        return id in self._types or id in self._concepts

    def is_concept(self, id) -> bool:
        return id in self._concepts

    def is_instance(self, id) -> bool:
        return id in self._types

    def _require_node(self, id):
        if id not in self._types and id not in self._concepts:
            raise UnknownElement(id)

    def _require_concept(self, id):
        if id not in self._concepts:
            raise UnknownConcept(id)

    def concept(self, id) -> Concept:
        with self.lock.read():
            self._require_concept(id)
            return Concept(id, frozenset(self._parents[id]), self._concepts[id], id in self._auto)

    def instance(self, id) -> Instance:
        with self.lock.read():
            if id not in self._types:
                raise UnknownElement(id)
            return Instance(id, frozenset(self._types[id]))

    def predicate(self, id) -> PredicateType:
        try:
            return self._predicates[id]
        except KeyError:
            raise UnknownPredicate(id) from None

    def property_type(self, key) -> PropertyType:
        if key not in self._ptypes:
            raise UnknownPropertyType(key)
        return PropertyType(key, self._ptypes[key])

    def concepts(self) -> list:
        with self.lock.read():
            return sorted(self._concepts)

    def instances(self) -> list:
        with self.lock.read():
            return sorted(self._types)

    def predicates(self) -> list:
        return sorted(self._predicates)

    def property_types(self) -> list:
        return sorted(self._ptypes)

    def types_of(self, instance) -> frozenset:
        try:
            return frozenset(self._types[instance])
        except KeyError:
            raise UnknownElement(instance) from None

    def parents_of(self, concept) -> frozenset:
        self._require_concept(concept)
        return frozenset(self._parents[concept])

    def children_of(self, concept) -> frozenset:
        self._require_concept(concept)
        return frozenset(self._children[concept])

    def direct_instances(self, concept) -> frozenset:
        self._require_concept(concept)
        return frozenset(self._inst_of[concept])

    def is_auto(self, concept) -> bool:
        return concept in self._auto

    def counts(self) -> dict:
        with self.lock.read():
            return {
                "concepts": len(self._concepts),
                "instances": len(self._types),
                "edges": len(self._edges),
                "properties": sum(len(p) for p in self._props.values()),
                "subclass_pairs": sum(len(p) for p in self._parents.values()),
                "type_pairs": sum(len(t) for t in self._types.values()),
                "predicates": len(self._predicates),
                "property_types": len(self._ptypes),
            }

    # -- schema -----------------------------------------------------------

    def _check_new_id(self, id):
        if not isinstance(id, str) or not id:
            raise InvalidValue(id, "element ids must be non-empty strings")
        if self.kind(id) is not None:
            raise DuplicateId(id)

    def add_concept(self, id, parents: Iterable = (), label=None, *, auto=False) -> Concept:
        parents = frozenset(parents)
        with self.lock.write():
            self._check_new_id(id)
            for p in parents:
                if p not in self._concepts:
                    raise UnknownParent(p)
            # A fresh id cannot already be an ancestor of anything, so no
            # cycle is possible here; add_parent carries the real check.
            self._concepts[id] = label
            self._parents[id] = set(parents)
            self._children[id] = set()
            self._inst_of[id] = set()
            for p in parents:
                self._children[p].add(id)
            if auto:
                self._auto.add(id)
            return Concept(id, parents, label, auto)

    def add_parent(self, concept, parent):
        """Add a subsumption link ``concept ⊑ parent`` to existing concepts."""
        with self.lock.write():
            self._require_concept(concept)
            if parent not in self._concepts:
                raise UnknownParent(parent)
            if parent == concept or concept in self._ancestors_unlocked(parent):
                raise CycleDetected(concept)
            self._parents[concept].add(parent)
            self._children[parent].add(concept)

    def set_label(self, concept, label):
        with self.lock.write():
            self._require_concept(concept)
            self._concepts[concept] = label

    def add_predicate(self, id, transitive=False) -> PredicateType:
        with self.lock.write():
            self._check_new_id(id)
            pt = PredicateType(id, bool(transitive))
            self._predicates[id] = pt
            self._pred_edges[id] = [0, 0, 0]  # edges, distinct subjects, distinct objects
            return pt

    def set_transitive(self, predicate, transitive=True):
        with self.lock.write():
            self.predicate(predicate)
            self._predicates[predicate] = PredicateType(predicate, bool(transitive))

    def add_property_type(self, key, parent=None) -> PropertyType:
        with self.lock.write():
            self._check_new_id(key)
            if parent is not None and parent not in self._ptypes:
                raise UnknownPropertyType(parent)
            self._ptypes[key] = parent
            self._ptype_children[key] = set()
            if parent is not None:
                self._ptype_children[parent].add(key)
            return PropertyType(key, parent)

    def property_subkeys(self, key) -> list:
        """``key`` and every property type registered beneath it."""
        if key not in self._ptypes:
            return []
        out, stack = [], [key]
        while stack:
            k = stack.pop()
            out.append(k)
            stack.extend(self._ptype_children[k])
        return out

    # -- instances, edges, properties -------------------------------------

    def add_instance(self, id, types: Iterable) -> Instance:
        types = frozenset(types)
        with self.lock.write():
            self._check_new_id(id)
            if not types:
                raise EmptyTypes(id, f"instance {id!r} needs at least one type")
            for t in types:
                self._require_concept(t)
            self._types[id] = set(types)
            for t in types:
                self._inst_of[t].add(id)
            self._notify_added(id)
            return Instance(id, types)

    def add_types(self, id, types: Iterable) -> set:
        """Add further types to an existing instance; returns the ones that were new."""
        with self.lock.write():
            if id not in self._types:
                raise UnknownElement(id)
            types = set(types)
            for t in types:
                self._require_concept(t)
            new = types - self._types[id]
            self._types[id] |= new
            for t in new:
                self._inst_of[t].add(id)
            return new

    def add_edge(self, subject, predicate, object) -> EdgeId:
        with self.lock.write():
            key = (subject, predicate, object)
            eid = self._eid.get(key)
            if eid is not None:
                return eid
            if predicate not in self._predicates:
                raise UnknownPredicate(predicate)
            self._require_node(subject)
            self._require_node(object)
            eid = next(self._next_edge)
            self._insert_edge(eid, subject, predicate, object)
            return eid

    def _insert_edge(self, eid, s, p, o):
        self._edges[eid] = (s, p, o)
        self._eid[(s, p, o)] = eid
        stats = self._pred_edges[p]
        stats[0] += 1
        objs = self._out.get((s, p))
        if objs is None:
            self._out[(s, p)] = {o}
            stats[1] += 1
        else:
            objs.add(o)
        subs = self._in.get((o, p))
        if subs is None:
            self._in[(o, p)] = {s}
            stats[2] += 1
        else:
            subs.add(s)

    def _drop_edge(self, eid):
        s, p, o = self._edges.pop(eid)
        del self._eid[(s, p, o)]
        stats = self._pred_edges[p]
        stats[0] -= 1
        objs = self._out[(s, p)]
        objs.discard(o)
        if not objs:
            del self._out[(s, p)]
            stats[1] -= 1
        subs = self._in[(o, p)]
        subs.discard(s)
        if not subs:
            del self._in[(o, p)]
            stats[2] -= 1

    def remove_edge(self, edge_id):
        with self.lock.write():
            if edge_id not in self._edges:
                raise UnknownElement(edge_id)
            self._drop_edge(edge_id)

    def edge(self, edge_id) -> Edge:
        try:
            return Edge(edge_id, *self._edges[edge_id])
        except KeyError:
            raise UnknownElement(edge_id) from None

    def edge_id(self, subject, predicate, object) -> Optional[EdgeId]:
        return self._eid.get((subject, predicate, object))

    def edges(self) -> list:
        with self.lock.read():
            return [Edge(eid, *t) for eid, t in self._edges.items()]

    def objects(self, subject, predicate) -> frozenset:
        return frozenset(self._out.get((subject, predicate), ()))

    def subjects(self, object, predicate) -> frozenset:
        return frozenset(self._in.get((object, predicate), ()))

    def predicate_stats(self, predicate) -> tuple:
        """(edge count, distinct subjects, distinct objects) for a predicate."""
        return tuple(self._pred_edges.get(predicate, (0, 0, 0)))

    def incident_edges(self, node) -> set:
        found = set()
        for p in self._predicates:
            for o in self._out.get((node, p), ()):
                found.add(self._eid[(node, p, o)])
            for s in self._in.get((node, p), ()):
                found.add(self._eid[(s, p, node)])
        return found

    def set_property(self, owner, key, value):
        _check_value(owner, value)
        with self.lock.write():
            self._require_node(owner)
            if key not in self._ptypes:
                raise UnknownPropertyType(key)
            props = self._props.setdefault(owner, {})
            if key in props:
                self._unindex_property(owner, key, props[key])
            props[key] = value
            self._by_key.setdefault(key, set()).add(owner)
            self._by_value.setdefault((key, _value_key(value)), set()).add(owner)

    def _unindex_property(self, owner, key, value):
        owners = self._by_key[key]
        owners.discard(owner)
        if not owners:
            del self._by_key[key]
        vk = (key, _value_key(value))
        owners = self._by_value[vk]
        owners.discard(owner)
        if not owners:
            del self._by_value[vk]

    def remove_property(self, owner, key):
        with self.lock.write():
            props = self._props.get(owner)
            if not props or key not in props:
                return False
            self._unindex_property(owner, key, props.pop(key))
            if not props:
                del self._props[owner]
            return True

    def properties_of(self, owner) -> dict:
        self._require_node(owner)
        return dict(self._props.get(owner, ()))

    def properties(self) -> list:
        with self.lock.read():
            return [(o, k, v) for o, props in self._props.items() for k, v in props.items()]

    def owners_with(self, key, value=None) -> frozenset:
        if value is None:
            return frozenset(self._by_key.get(key, ()))
        return frozenset(self._by_value.get((key, _value_key(value)), ()))

    def get_property(self, owner, key, inherit=False):
        """Own value of ``key`` on ``owner``; with ``inherit``, fall back to the taxonomy.

        Inherited lookup walks breadth-first from the owner's types (or, for a
        concept, its parents) and returns the value at the smallest distance.
        Several definers at that distance must agree unless one of them is a
        subconcept of the other, which makes it the more specific one.
        """
        with self.lock.read():
            self._require_node(owner)
            own = self._props.get(owner)
            if own is not None and key in own:
                return own[key]
            if not inherit:
                return None
            if owner in self._types:
                frontier = set(self._types[owner])
            else:
                frontier = set(self._parents[owner])
            seen = set(frontier)
            while frontier:
                found = {c: self._props[c][key] for c in frontier
                         if key in self._props.get(c, ())}
                if found:
                    return self._resolve_inherited(owner, key, found)
                nxt = set()
                for c in frontier:
                    nxt.update(self._parents[c])
                nxt -= seen
                seen |= nxt
                frontier = nxt
            return None

    def _resolve_inherited(self, owner, key, found):
        if len(set(map(_value_key, found.values()))) == 1:
            return next(iter(found.values()))
        definers = set(found)
        shadowed = set()
        for c in definers:
            shadowed |= self._ancestors_unlocked(c) & definers
        winners = {c: found[c] for c in definers - shadowed}
        if len(set(map(_value_key, winners.values()))) == 1:
            return next(iter(winners.values()))
        raise AmbiguousInheritance(owner, key, dict(sorted(winners.items())))

    # -- subsumption ------------------------------------------------------

    def _ancestors_unlocked(self, concept) -> set:
        seen = set()
        stack = list(self._parents[concept])
        while stack:
            c = stack.pop()
            if c not in seen:
                seen.add(c)
                stack.extend(self._parents[c])
        return seen

    def _descendants_unlocked(self, concept) -> set:
        seen = set()
        stack = list(self._children[concept])
        while stack:
            c = stack.pop()
            if c not in seen:
                seen.add(c)
                stack.extend(self._children[c])
        return seen

    def ancestors(self, concept) -> set:
        with self.lock.read():
            self._require_concept(concept)
            return self._ancestors_unlocked(concept)

    def descendants(self, concept) -> set:
        with self.lock.read():
            self._require_concept(concept)
            return self._descendants_unlocked(concept)

    def all_instances(self, concept) -> set:
        with self.lock.read():
            self._require_concept(concept)
            out = set(self._inst_of[concept])
            for c in self._descendants_unlocked(concept):
                out |= self._inst_of[c]
            return out

    def subsumes(self, ancestor, concept) -> bool:
        """True if ``concept`` equals ``ancestor`` or lies beneath it."""
        if ancestor == concept:
            return True
        seen = set()
        stack = list(self._parents[concept])
        while stack:
            c = stack.pop()
            if c == ancestor:
                return True
            if c not in seen:
                seen.add(c)
                stack.extend(self._parents[c])
        return False

    def is_instance_of(self, instance, concept) -> bool:
        with self.lock.read():
            if instance not in self._types:
                raise UnknownElement(instance)
            self._require_concept(concept)
            types = self._types[instance]
            if concept in types:
                return True
            return any(self.subsumes(concept, t) for t in types)

    # -- access control ---------------------------------------------------

    def set_acl(self, element, principal, permission: Permission):
        with self.lock.write():
            self._require_node(element)
            self._acl.setdefault(element, {}).setdefault(principal, set()).add(Permission(permission))

    def revoke_acl(self, element, principal, permission: Optional[Permission] = None):
        """Remove a grant. The element keeps its (possibly empty) ACL entry,
        so revoking never reopens it to everyone; use :meth:`clear_acl` for that."""
        with self.lock.write():
            self._require_node(element)
            grants = self._acl.get(element)
            if not grants or principal not in grants:
                return
            if permission is None:
                grants[principal].clear()
            else:
                grants[principal].discard(Permission(permission))
            if not grants[principal]:
                del grants[principal]

    def clear_acl(self, element):
        with self.lock.write():
            self._require_node(element)
            self._acl.pop(element, None)

    def acl(self, element) -> dict:
        self._require_node(element)
        return {p: set(perms) for p, perms in self._acl.get(element, {}).items()}

    def has_acl(self) -> bool:
        return bool(self._acl)

    def _allowed(self, element, principal, permission) -> bool:
        if principal == ROOT_PRINCIPAL:
            return True
        grants = self._acl.get(element)
        if grants is None:
            return True
        held = grants.get(principal)
        if not held:
            return False
        return Permission.WRITE in held or permission in held

    def check_access(self, element, principal, permission=Permission.READ) -> bool:
        with self.lock.read():
            self._require_node(element)
            return self._allowed(element, principal, Permission(permission))

    def visibility(self, principal) -> Optional[Callable]:
        """A READ predicate for ``principal``, or None when everything is visible."""
        if principal == ROOT_PRINCIPAL or not self._acl:
            return None
        acl = self._acl

        def visible(element):
            grants = acl.get(element)
            if grants is None:
                return True
            return bool(grants.get(principal))

        return visible

    # -- deletion ---------------------------------------------------------

    def add_dependency_provider(self, provider):
        """Register an object exposing ``dependents(ids)`` and ``drop(ids)``.

        Used for things outside the store that reference elements (event rules).
        """
        self._dependency_providers.append(provider)

    def delete_element(self, id, cascade=False) -> DeletionReport:
        with self.lock.write():
            kind = self.kind(id)
            if kind is None:
                raise UnknownElement(id)
            if kind == "predicate":
                return self._delete_predicate(id, cascade)
            if kind == "property":
                return self._delete_property_type(id, cascade)

            nodes = {id}
            if kind == "concept":
                nodes |= self._descendants_unlocked(id)
                for c in list(nodes):
                    nodes |= self._inst_of[c]
            edges = set()
            for n in nodes:
                edges |= self.incident_edges(n)
            rules = set()
            for provider in self._dependency_providers:
                rules |= set(provider.dependents(nodes))

            if not cascade:
                blocking = (nodes - {id}) | {f"edge:{e}" for e in edges} | rules
                if blocking:
                    raise HasDependents(id, blocking)

            for provider in self._dependency_providers:
                provider.drop(nodes)
            for e in edges:
                self._drop_edge(e)
            nprops = 0
            for n in nodes:
                props = self._props.pop(n, None)
                if props:
                    nprops += len(props)
                    for k, v in props.items():
                        self._unindex_property(n, k, v)
                self._acl.pop(n, None)
            for n in nodes:
                if n in self._types:
                    for t in self._types.pop(n):
                        self._inst_of[t].discard(n)
            for n in nodes:
                if n in self._concepts:
                    for p in self._parents[n]:
                        if p in self._children:
                            self._children[p].discard(n)
            for n in nodes:
                if n in self._concepts:
                    del self._concepts[n]
                    del self._parents[n]
                    del self._children[n]
                    del self._inst_of[n]
                    self._auto.discard(n)
            return DeletionReport(frozenset(nodes), frozenset(edges), nprops, frozenset(rules))

    def _delete_predicate(self, id, cascade):
        edges = {eid for eid, (_, p, _) in self._edges.items() if p == id}
        if edges and not cascade:
            raise HasDependents(id, {f"edge:{e}" for e in edges})
        for e in edges:
            self._drop_edge(e)
        del self._predicates[id]
        del self._pred_edges[id]
        return DeletionReport(frozenset({id}), frozenset(edges))

    def _delete_property_type(self, id, cascade):
        keys = set(self.property_subkeys(id))
        owners = {(o, k) for k in keys for o in self._by_key.get(k, ())}
        if not cascade and (owners or keys - {id}):
            raise HasDependents(id, (keys - {id}) | {f"{o}@{k}" for o, k in owners})
        for o, k in owners:
            value = self._props[o].pop(k)
            self._unindex_property(o, k, value)
            if not self._props[o]:
                del self._props[o]
        parent = self._ptypes[id]
        if parent is not None:
            self._ptype_children[parent].discard(id)
        for k in keys:
            del self._ptypes[k]
            del self._ptype_children[k]
        return DeletionReport(frozenset(keys), frozenset(), len(owners))

    # -- events -----------------------------------------------------------

    def add_listener(self, fn: Callable):
        """Call ``fn(instance_id)`` after each instance addition (deferred inside a batch)."""
        self._listeners.append(fn)

    def remove_listener(self, fn: Callable):
        self._listeners.remove(fn)

    def _notify_added(self, id):
        if not self._listeners:
            return
        if self._batch_depth:
            self._pending.append(id)
        else:
            for fn in list(self._listeners):
                fn(id)

    @contextmanager
    def batch(self):
        """Group mutations; instance-added notifications fire when the outermost batch exits."""
        with self.lock.write():
            self._batch_depth += 1
            try:
                yield self
            finally:
                self._batch_depth -= 1
            if not self._batch_depth:
                while self._pending:
                    pending, self._pending = self._pending, []
                    for id in pending:
                        if id in self._types:
                            for fn in list(self._listeners):
                                fn(id)

    # -- copies and dumps -------------------------------------------------

    def clone(self) -> "Graph":
        """Independent copy of all graph data. Listeners and providers are not copied."""
        with self.lock.read():
            g = Graph.__new__(Graph)
            g.lock = RWLock()
            g._concepts = dict(self._concepts)
            g._auto = set(self._auto)
            g._parents = {k: set(v) for k, v in self._parents.items()}
            g._children = {k: set(v) for k, v in self._children.items()}
            g._inst_of = {k: set(v) for k, v in self._inst_of.items()}
            g._types = {k: set(v) for k, v in self._types.items()}
            g._predicates = dict(self._predicates)
            g._ptypes = dict(self._ptypes)
            g._ptype_children = {k: set(v) for k, v in self._ptype_children.items()}
            g._edges = dict(self._edges)
            g._eid = dict(self._eid)
            g._out = {k: set(v) for k, v in self._out.items()}
            g._in = {k: set(v) for k, v in self._in.items()}
            g._pred_edges = {k: list(v) for k, v in self._pred_edges.items()}
            g._props = {k: dict(v) for k, v in self._props.items()}
            g._by_key = {k: set(v) for k, v in self._by_key.items()}
            g._by_value = {k: set(v) for k, v in self._by_value.items()}
            g._acl = {k: {p: set(s) for p, s in v.items()} for k, v in self._acl.items()}
            g._next_edge = itertools.count(max(self._edges, default=0) + 1)
            g._listeners = []
            g._dependency_providers = []
            g._batch_depth = 0
            g._pending = []
            return g

    def snapshot(self) -> dict:
        """Plain-data dump, one list per element kind, deterministically ordered."""
        with self.lock.read():
            return {
                "concepts": [
                    {"id": c, "parents": sorted(self._parents[c]), "label": self._concepts[c],
                     "auto": c in self._auto}
                    for c in sorted(self._concepts)
                ],
                "instances": [{"id": i, "types": sorted(t)} for i, t in sorted(self._types.items())],
                "predicates": [
                    {"id": p, "transitive": pt.transitive} for p, pt in sorted(self._predicates.items())
                ],
                "property_types": [{"id": k, "parent": par} for k, par in sorted(self._ptypes.items())],
                "edges": [
                    {"id": eid, "subject": s, "predicate": p, "object": o}
                    for (s, p, o), eid in sorted(self._eid.items())
                ],
                "properties": sorted(
                    ({"owner": o, "key": k, "value": v}
                     for o, props in self._props.items() for k, v in props.items()),
                    key=lambda r: (r["owner"], r["key"]),
                ),
                "acl": [
                    {"element": e, "principal": p, "permission": perm.name}
                    for e in sorted(self._acl)
                    for p in sorted(self._acl[e])
                    for perm in sorted(self._acl[e][p])
                ],
            }

    @classmethod
    def from_snapshot(cls, data: dict) -> "Graph":
        g = cls()
        with g.lock.write():
            pending = {c["id"]: c for c in data.get("concepts", [])}
            while pending:
                ready = [c for c in pending.values() if all(p in g._concepts for p in c["parents"])]
                if not ready:
                    raise CycleDetected(sorted(pending)[0])
                for c in sorted(ready, key=lambda c: c["id"]):
                    g.add_concept(c["id"], c["parents"], c.get("label"), auto=c.get("auto", False))
                    del pending[c["id"]]
            for p in data.get("predicates", []):
                g.add_predicate(p["id"], p.get("transitive", False))
            pending = {k["id"]: k.get("parent") for k in data.get("property_types", [])}
            while pending:
                ready = [k for k, par in pending.items() if par is None or par in g._ptypes]
                if not ready:
                    raise CycleDetected(sorted(pending)[0])
                for k in sorted(ready):
                    g.add_property_type(k, pending.pop(k))
            for i in data.get("instances", []):
                g.add_instance(i["id"], i["types"])
            for e in data.get("edges", []):
                g.add_edge(e["subject"], e["predicate"], e["object"])
            for r in data.get("properties", []):
                g.set_property(r["owner"], r["key"], r["value"])
            for r in data.get("acl", []):
                g.set_acl(r["element"], r["principal"], Permission[r["permission"]])
        return g

    def dump_json(self, fp, **kw):
        json.dump(self.snapshot(), fp, **kw)

    def structure(self) -> dict:
        """Snapshot without edge ids and ACL, for isomorphism comparisons."""
        snap = self.snapshot()
        snap["edges"] = sorted((e["subject"], e["predicate"], e["object"]) for e in snap["edges"])
        del snap["acl"]
        return snap

    def iter_triples(self) -> Iterator[tuple]:
        for (s, p, o) in self._eid:
            yield s, p, o
