"""Key/value data access behind the graph.

The graph stores only data keys (``key://<kind>/<path>``). Resolvers map one
backend kind onto ``fetch(key) -> payload``; the registry dispatches on the
kind. :func:`semantic_fetch` combines a graph walk with dereferencing, so a
caller gets data together with the elements it hangs off.
"""

from __future__ import annotations

import csv
import hashlib
import json
import mimetypes
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .graph import Graph, UnknownConcept, UnknownElement
from .reasoner import reach

DATA_ROOT = "dt:Data"
DATA_KEY = "dt:hasDataKey"
ATTACHMENT_PREDICATES = ("dt:hasSeries",)

_KEY = re.compile(r"key://([^/]+)/(.+)\Z")


class DataAccessError(Exception):
    pass


class DuplicateResolverKind(DataAccessError):
    pass


class UnknownResolverKind(DataAccessError):
    pass


class InvalidDataKey(DataAccessError):
    pass


class ResolverFailure(DataAccessError):
    def __init__(self, key, cause, element=None):
        self.key = key
        self.cause = cause
        self.element = element
        super().__init__(f"resolving {key!r} failed: {cause}")


@dataclass(frozen=True)
class DataKey:
    kind: str
    path: str

    @classmethod
    def parse(cls, uri: str) -> "DataKey":
        m = _KEY.match(uri) if isinstance(uri, str) else None
        if m is None:
            raise InvalidDataKey(f"not a data key: {uri!r}")
        return cls(m.group(1), m.group(2))

    def __str__(self):
        return f"key://{self.kind}/{self.path}"


@dataclass(frozen=True)
class TimeseriesPayload:
    points: tuple  # ((epoch_ms, value), ...)

    def __post_init__(self):
        ts = [t for t, _ in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timeseries timestamps must be strictly increasing")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class FilePayload:
    data: bytes
    media_type: str = "application/octet-stream"


@dataclass(frozen=True)
class DocumentPayload:
    text: str

    def __post_init__(self):
        json.loads(self.text)

    def json(self):
        return json.loads(self.text)


Payload = Union[TimeseriesPayload, FilePayload, DocumentPayload]


class Resolver:
    """One backend kind. Subclasses set ``kind`` and implement :meth:`fetch`."""

    kind: str = ""

    def fetch(self, key: DataKey) -> Payload:
        raise NotImplementedError


def _safe_path(root: Path, rel: str) -> Path:
    path = (root / rel).resolve()
    if root.resolve() not in path.parents:
        raise DataAccessError(f"key path escapes resolver root: {rel!r}")
    return path


def _cell(text):
    try:
        return float(text)
    except ValueError:
        return text


class TimeseriesFileResolver(Resolver):
    """``<root>/timeseries/<path>.csv`` with header ``ts,value``."""

    kind = "timeseries"

    def __init__(self, root):
        self.root = Path(root) / "timeseries"

    def fetch(self, key):
        path = _safe_path(self.root, key.path + ".csv")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["ts", "value"]:
                raise DataAccessError(f"{path}: expected header ts,value, got {header}")
            points = tuple((int(row[0]), _cell(row[1])) for row in reader if row)
        return TimeseriesPayload(points)


class FileResolver(Resolver):
    """``<root>/file/<path>``, returned raw."""

    kind = "file"

    def __init__(self, root):
        self.root = Path(root) / "file"

    def fetch(self, key):
        path = _safe_path(self.root, key.path)
        media = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        return FilePayload(path.read_bytes(), media)


class DocumentFileResolver(Resolver):
    kind = "document"

    def __init__(self, root):
        self.root = Path(root) / "document"

    def fetch(self, key):
        path = _safe_path(self.root, key.path + ".json")
        return DocumentPayload(path.read_text(encoding="utf-8"))


class SyntheticResolver(Resolver):
    """Deterministic stand-in data derived from a hash of the key.

    Keeps every generated benchmark key dereferenceable without a backend.
    """

    def __init__(self, kind, points=96, start_ms=1_600_000_000_000, step_ms=900_000):
        self.kind = kind
        self.points = points
        self.start_ms = start_ms
        self.step_ms = step_ms

    def _rng(self, key):
        digest = hashlib.sha256(str(key).encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    def fetch(self, key):
        rng = self._rng(key)
        if self.kind == "file":
            return FilePayload(rng.bytes(256))
        if self.kind == "document":
            doc = {"key": str(key), "id": int(rng.integers(1, 10**6)), "priority": int(rng.integers(1, 4))}
            return DocumentPayload(json.dumps(doc, sort_keys=True))
        ts = self.start_ms + self.step_ms * np.arange(self.points)
        if "state" in key.path:
            states = rng.choice(["on", "off"], size=self.points)
            return TimeseriesPayload(tuple(zip(ts.tolist(), states.tolist())))
        values = np.round(np.cumsum(rng.normal(0.0, 1.0, self.points)) + 50.0, 4)
        return TimeseriesPayload(tuple(zip(ts.tolist(), values.tolist())))


class ResolverRegistry:
    def __init__(self):
        self._resolvers = {}

    def register_resolver(self, resolver: Resolver):
        if not resolver.kind:
            raise DataAccessError("resolver kind must be non-empty")
        if resolver.kind in self._resolvers:
            raise DuplicateResolverKind(resolver.kind)
        self._resolvers[resolver.kind] = resolver

    def replace_resolver(self, resolver: Resolver):
        self._resolvers[resolver.kind] = resolver

    def kinds(self):
        return sorted(self._resolvers)

    def resolve(self, key) -> Payload:
        if not isinstance(key, DataKey):
            key = DataKey.parse(key)
        resolver = self._resolvers.get(key.kind)
        if resolver is None:
            raise UnknownResolverKind(key.kind)
        try:
            return resolver.fetch(key)
        except Exception as exc:
            raise ResolverFailure(str(key), exc) from exc


def default_registry(root=None) -> ResolverRegistry:
    """File-backed resolvers under ``root``, or synthetic ones when no root is given."""
    reg = ResolverRegistry()
    if root is None:
        for kind in ("timeseries", "file", "document"):
            reg.register_resolver(SyntheticResolver(kind))
    else:
        reg.register_resolver(TimeseriesFileResolver(root))
        reg.register_resolver(FileResolver(root))
        reg.register_resolver(DocumentFileResolver(root))
    return reg


@dataclass
class FetchResult:
    items: list = field(default_factory=list)  # [(element id, payload)]
    failures: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def ids(self):
        return [e for e, _ in self.items]


def attached_data(graph: Graph, instance, data_concept, principal="root",
                  attachments=ATTACHMENT_PREDICATES) -> list:
    """Data elements of ``data_concept`` attached to the instance or its hasPart descendants."""
    with graph.lock.read():
        if not graph.is_node(instance):
            raise UnknownElement(instance)
        if not graph.is_concept(data_concept):
            raise UnknownConcept(data_concept)
        if not graph.subsumes(DATA_ROOT, data_concept):
            raise DataAccessError(f"{data_concept!r} is not a kind of {DATA_ROOT}")
        visible = graph.visibility(principal)
        if visible is not None and not visible(instance):
            return []
        holders = [instance] + sorted(reach(graph, instance, "dt:hasPart", True, visible))
        found = set()
        for h in holders:
            for p in attachments:
                for d in graph._out.get((h, p), ()):
                    if visible is not None and not visible(d):
                        continue
                    if d in graph._types and any(graph.subsumes(data_concept, t) for t in graph._types[d]):
                        found.add(d)
        return sorted(found)


def data_key_of(graph: Graph, element):
    props = graph._props.get(element, {})
    for k in sorted(graph.property_subkeys(DATA_KEY)):
        if k in props:
            return props[k]
    return None


def semantic_fetch(graph: Graph, registry: ResolverRegistry, instance, data_concept,
                   principal="root") -> FetchResult:
    """Data of one concept around an instance, dereferenced through the registry.

    Resolution problems are collected on the result instead of raised. The
    graph is only read.
    """
    result = FetchResult()
    for element in attached_data(graph, instance, data_concept, principal):
        key = data_key_of(graph, element)
        if key is None:
            result.failures.append(ResolverFailure(None, "element has no data key", element))
            continue
        try:
            result.items.append((element, registry.resolve(key)))
        except DataAccessError as exc:
            failure = exc if isinstance(exc, ResolverFailure) else ResolverFailure(key, exc)
            failure.element = element
            result.failures.append(failure)
    return result
