"""RDF export (N-Triples) and import (N-Triples, Turtle subset).

Element ids are prefixed names such as ``dt:Asset``; known prefixes expand
to full IRIs on export and compact back on import, so a round trip keeps ids
intact. Triples map onto the graph by shape:

* ``rdfs:subClassOf``              -> concept hierarchy
* ``rdf:type`` a concept           -> instance typing
* IRI object                       -> edge
* literal object                   -> property

plus a few schema declarations (``owl:Class``, ``owl:ObjectProperty``,
``owl:TransitiveProperty``, ``owl:DatatypeProperty``, ``rdfs:subPropertyOf``)
so predicates, property types and parentless concepts survive a round trip.
"""

from __future__ import annotations

import io
import math
import os
import re
from collections import defaultdict
from dataclasses import dataclass

from .graph import CycleDetected, Graph
from .query.model import Lit, sort_key

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"

PREFIXES = {
    "rdf": RDF,
    "rdfs": RDFS,
    "owl": OWL,
    "xsd": XSD,
    "dt": "http://example.org/dtbm/core#",
    "f": "http://example.org/dtbm/factory#",
}

RDF_TYPE = "rdf:type"
SUBCLASS = "rdfs:subClassOf"
SUBPROPERTY = "rdfs:subPropertyOf"
LABEL = "rdfs:label"
OWL_CLASS = "owl:Class"
OWL_OBJECT_PROPERTY = "owl:ObjectProperty"
OWL_TRANSITIVE = "owl:TransitiveProperty"
OWL_DATATYPE_PROPERTY = "owl:DatatypeProperty"
AUTO_ROOT = "owl:Thing"

CLASS_MARKERS = {OWL_CLASS, "rdfs:Class"}
PREDICATE_MARKERS = {OWL_OBJECT_PROPERTY, "rdf:Property", OWL_TRANSITIVE}
SCHEMA_MARKERS = CLASS_MARKERS | PREDICATE_MARKERS | {OWL_DATATYPE_PROPERTY}


class ParseError(ValueError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


# -- IRI handling -----------------------------------------------------------

_IRI_ESCAPE = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def expand(id, prefixes=PREFIXES) -> str:
    prefix, sep, local = id.partition(":")
    if sep and prefix in prefixes:
        iri = prefixes[prefix] + local
    else:
        iri = id
    return _IRI_ESCAPE.sub(lambda m: f"\\u{ord(m.group()):04X}", iri)


def compact(iri, prefixes=PREFIXES) -> str:
    best = None
    for prefix, ns in prefixes.items():
        if iri.startswith(ns) and (best is None or len(ns) > len(prefixes[best])):
            best = prefix
    if best is None:
        return iri
    return f"{best}:{iri[len(prefixes[best]):]}"


# -- literals ---------------------------------------------------------------

_STRING_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPE = re.compile(r'\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))')
_SIMPLE_UNESCAPE = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
                    '"': '"', "'": "'", "\\": "\\"}


def _escape_string(s):
    return "".join(_STRING_ESCAPES.get(c, c) for c in s)


def _unescape(s, line):
    def sub(m):
        if m.group(1) or m.group(2):
            return chr(int(m.group(1) or m.group(2), 16))
        c = m.group(3)
        if c not in _SIMPLE_UNESCAPE:
            raise ParseError(line, f"bad escape \\{c}")
        return _SIMPLE_UNESCAPE[c]

    return _UNESCAPE.sub(sub, s) if "\\" in s else s


def format_literal(value) -> str:
    if isinstance(value, bool):
        return f'"{str(value).lower()}"^^<{XSD}boolean>'
    if isinstance(value, int):
        return f'"{value}"^^<{XSD}integer>'
    if isinstance(value, float):
        if math.isnan(value):
            text = "NaN"
        elif math.isinf(value):
            text = "INF" if value > 0 else "-INF"
        else:
            text = repr(value)
        return f'"{text}"^^<{XSD}double>'
    return f'"{_escape_string(value)}"'


def literal_value(text, datatype, line):
    """Convert a lexical form to a Python value; unsupported datatypes stay strings."""
    dt = compact(datatype) if datatype else None
    try:
        if dt in ("xsd:integer", "xsd:int", "xsd:long", "xsd:short", "xsd:nonNegativeInteger",
                  "xsd:positiveInteger"):
            return int(text)
        if dt in ("xsd:double", "xsd:float", "xsd:decimal"):
            return float(text.replace("INF", "inf"))
        if dt == "xsd:boolean":
            if text in ("true", "1"):
                return True
            if text in ("false", "0"):
                return False
            raise ValueError(text)
    except ValueError:
        raise ParseError(line, f"bad {dt} literal {text!r}") from None
    return text


# -- export -----------------------------------------------------------------

def iter_ntriples(graph: Graph, prefixes=PREFIXES):
    """Yield N-Triples lines (without newline) in deterministic order."""
    x = lambda id: f"<{expand(id, prefixes)}>"  # noqa: E731
    t_type, t_sub, t_subp, t_label = x(RDF_TYPE), x(SUBCLASS), x(SUBPROPERTY), x(LABEL)
    with graph.lock.read():
        for p in sorted(graph._predicates):
            marker = OWL_TRANSITIVE if graph._predicates[p].transitive else OWL_OBJECT_PROPERTY
            yield f"{x(p)} {t_type} {x(marker)} ."
        for k in sorted(graph._ptypes):
            yield f"{x(k)} {t_type} {x(OWL_DATATYPE_PROPERTY)} ."
            if graph._ptypes[k] is not None:
                yield f"{x(k)} {t_subp} {x(graph._ptypes[k])} ."
        for c in sorted(graph._concepts):
            if not graph._parents[c]:
                yield f"{x(c)} {t_type} {x(OWL_CLASS)} ."
            if graph._concepts[c] is not None:
                yield f"{x(c)} {t_label} {format_literal(graph._concepts[c])} ."
        for c in sorted(graph._concepts):
            for parent in sorted(graph._parents[c]):
                yield f"{x(c)} {t_sub} {x(parent)} ."
        for i in sorted(graph._types):
            for t in sorted(graph._types[i]):
                yield f"{x(i)} {t_type} {x(t)} ."
        for s, p, o in sorted(graph._eid):
            yield f"{x(s)} {x(p)} {x(o)} ."
        for owner in sorted(graph._props):
            props = graph._props[owner]
            for k in sorted(props):
                yield f"{x(owner)} {x(k)} {format_literal(props[k])} ."


def triple_count(graph: Graph) -> int:
    """Number of lines :func:`export_ntriples` would write."""
    with graph.lock.read():
        n = len(graph._predicates) + len(graph._ptypes)
        n += sum(1 for par in graph._ptypes.values() if par is not None)
        n += sum(1 for c in graph._concepts if not graph._parents[c])
        n += sum(1 for label in graph._concepts.values() if label is not None)
        n += sum(len(p) for p in graph._parents.values())
        n += sum(len(t) for t in graph._types.values())
        n += len(graph._edges)
        n += sum(len(p) for p in graph._props.values())
        return n


def export_ntriples(graph: Graph, sink, prefixes=PREFIXES) -> int:
    """Write the graph as N-Triples to a path or text stream; returns the triple count."""
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            return export_ntriples(graph, fh, prefixes)
    n = 0
    buf = []
    for line in iter_ntriples(graph, prefixes):
        buf.append(line)
        n += 1
        if len(buf) >= 4096:
            sink.write("\n".join(buf) + "\n")
            buf.clear()
    if buf:
        sink.write("\n".join(buf) + "\n")
    return n


def to_ntriples(graph: Graph, prefixes=PREFIXES) -> str:
    out = io.StringIO()
    export_ntriples(graph, out, prefixes)
    return out.getvalue()


# -- parsing ----------------------------------------------------------------

_NT_LINE = re.compile(
    r'\s*<([^<>"{}|^`\\\s]*(?:\\u[0-9A-Fa-f]{4}[^<>"{}|^`\\\s]*)*)>'
    r'\s*<([^>\s]*)>'
    r'\s*(?:<([^>\s]*)>|"((?:[^"\\\n]|\\.)*)"(?:\^\^<([^>\s]*)>|@([A-Za-z]+(?:-[A-Za-z0-9]+)*))?)'
    r'\s*\.\s*(?:#.*)?\Z'
)


def _iri(raw, line, prefixes):
    return compact(_unescape(raw, line), prefixes)


def parse_ntriples(text, prefixes=PREFIXES):
    """Yield (subject, predicate, object, line); object is an id or :class:`Lit`."""
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _NT_LINE.match(line)
        if m is None:
            if stripped.startswith("_:") or " _:" in stripped:
                raise ParseError(n, "blank nodes are not supported")
            raise ParseError(n, "malformed N-Triples statement")
        s = _iri(m.group(1), n, prefixes)
        p = _iri(m.group(2), n, prefixes)
        if m.group(3) is not None:
            o = _iri(m.group(3), n, prefixes)
        else:
            o = Lit(literal_value(_unescape(m.group(4), n), m.group(5), n))
        yield s, p, o, n


_TOKEN = re.compile(
    r'''(?P<ws>[ \t\r]+)
      |(?P<nl>\n)
      |(?P<comment>\#[^\n]*)
      |(?P<iri><[^<>"{}|^`\\\s]*>)
      |(?P<long>"""(?:[^"\\]|\\.|"(?!""))*""")
      |(?P<str>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
      |(?P<dtype>\^\^)
      |(?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
      |(?P<num>[+-]?(?:\d*\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+))
      |(?P<pname>(?:[A-Za-z][\w.-]*)?:(?:[\w-](?:[\w.-]*[\w-])?)?)
      |(?P<word>[A-Za-z_][\w-]*)
      |(?P<punct>[.;,\[\]()])
    ''',
    re.VERBOSE,
)


def _tokens(text):
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(line, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
        elif kind in ("ws", "comment"):
            pass
        else:
            yield kind, value, line
            line += value.count("\n")
        pos = m.end()
    yield "eof", "", line


class _TurtleParser:
    def __init__(self, text, prefixes):
        self.toks = list(_tokens(text))
        self.i = 0
        self.prefixes = dict(prefixes)
        self.local = {}

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, line = self.next()
        if v != value:
            raise ParseError(line, f"expected {value!r}, got {v!r}")

    def iri_token(self, kind, value, line):
        if kind == "iri":
            return _iri(value[1:-1], line, self.prefixes)
        if kind == "pname":
            prefix, _, local = value.partition(":")
            if prefix not in self.local:
                raise ParseError(line, f"undeclared prefix {prefix!r}")
            return compact(self.local[prefix] + local, self.prefixes)
        raise ParseError(line, f"expected an IRI, got {value!r}")

    def term(self, as_object):
        kind, value, line = self.next()
        if kind in ("iri", "pname"):
            return self.iri_token(kind, value, line)
        if kind == "word" and value == "a" and not as_object:
            return RDF_TYPE
        if not as_object:
            raise ParseError(line, f"unexpected {value!r}")
        if kind in ("str", "long"):
            body = value[3:-3] if kind == "long" else value[1:-1]
            text = _unescape(body, line)
            nk, nv, nl = self.peek()
            if nk == "dtype":
                self.next()
                dk, dv, dl = self.next()
                return Lit(literal_value(text, expand(self.iri_token(dk, dv, dl), self.prefixes), line))
            if nk == "lang":
                self.next()
            return Lit(text)
        if kind == "num":
            if re.fullmatch(r"[+-]?\d+", value):
                return Lit(int(value))
            return Lit(float(value))
        if kind == "word" and value in ("true", "false"):
            return Lit(value == "true")
        if value in ("[", "("):
            raise ParseError(line, "blank nodes and collections are not supported")
        raise ParseError(line, f"unexpected {value!r}")

    def parse(self):
        while True:
            kind, value, line = self.peek()
            if kind == "eof":
                return
            if value in ("@prefix", "PREFIX") or (kind == "word" and value.upper() == "PREFIX"):
                self.next()
                pk, pv, pl = self.next()
                if pk != "pname" or not pv.endswith(":"):
                    raise ParseError(pl, f"bad prefix name {pv!r}")
                ik, iv, il = self.next()
                if ik != "iri":
                    raise ParseError(il, "prefix needs an IRI")
                self.local[pv[:-1]] = _unescape(iv[1:-1], il)
                if value == "@prefix":
                    self.expect(".")
                continue
            if value == "@base" or (kind == "word" and value.upper() == "BASE"):
                raise ParseError(line, "@base is not supported")
            yield from self.statement()

    def statement(self):
        subject_line = self.peek()[2]
        s = self.term(as_object=False)
        while True:
            p = self.term(as_object=False)
            while True:
                line = self.peek()[2]
                o = self.term(as_object=True)
                yield s, p, o, line
                if self.peek()[1] == ",":
                    self.next()
                    continue
                break
            sep = self.next()
            if sep[1] == ";":
                if self.peek()[1] == ".":
                    self.next()
                    return
                continue
            if sep[1] == ".":
                return
            raise ParseError(sep[2], f"expected ';' or '.', got {sep[1]!r} (statement at line {subject_line})")


def parse_turtle(text, prefixes=PREFIXES):
    parser = _TurtleParser(text, prefixes)
    # "@prefix" tokenizes as a lang tag; normalise before parsing
    parser.toks = [("word", "@prefix", ln) if (k == "lang" and v == "@prefix") else (k, v, ln)
                   for k, v, ln in parser.toks]
    yield from parser.parse()


# -- import -----------------------------------------------------------------

@dataclass
class ImportReport:
    triples: int = 0
    concepts: int = 0
    auto_concepts: int = 0
    instances: int = 0
    edges: int = 0
    properties: int = 0
    predicates: int = 0
    property_types: int = 0
    dropped_values: int = 0

    def to_json(self):
        return dict(self.__dict__)


def _read_source(source):
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    if hasattr(source, "read"):
        return source.read()
    return source


def import_rdf(graph: Graph, source, format="ntriples", prefixes=PREFIXES) -> ImportReport:
    """Load RDF into the graph. ``source`` is a path, a stream, or the document text.

    Triples are grouped by role before anything is created, so the result
    does not depend on the order of statements in the input.
    """
    text = _read_source(source)
    if format in ("ntriples", "nt"):
        triples = list(parse_ntriples(text, prefixes))
    elif format in ("turtle", "ttl"):
        triples = list(parse_turtle(text, prefixes))
    else:
        raise ValueError(f"unknown RDF format {format!r}")
    return _load(graph, triples)


def _load(graph: Graph, triples) -> ImportReport:
    report = ImportReport(triples=len(triples))
    declared_classes, preds, transitive, dprops = set(), set(), set(), set()
    subprops, subclass = {}, defaultdict(set)
    labels = {}
    typings = defaultdict(set)
    iri_triples, lit_triples = [], []
    first_line = {}

    for s, p, o, line in triples:
        if p == RDF_TYPE and not isinstance(o, Lit):
            if o in CLASS_MARKERS:
                declared_classes.add(s)
            elif o in PREDICATE_MARKERS:
                preds.add(s)
                if o == OWL_TRANSITIVE:
                    transitive.add(s)
            elif o == OWL_DATATYPE_PROPERTY:
                dprops.add(s)
            else:
                typings[s].add(o)
                first_line.setdefault(s, line)
        elif p == SUBCLASS and not isinstance(o, Lit):
            subclass[s].add(o)
            first_line.setdefault(s, line)
        elif p == SUBPROPERTY and not isinstance(o, Lit):
            subprops[s] = o
            dprops.update((s, o))
        elif isinstance(o, Lit):
            lit_triples.append((s, p, o.value, line))
        else:
            iri_triples.append((s, p, o, line))

    concepts = declared_classes | set(subclass) | {c for ps in subclass.values() for c in ps}
    for s, p, v, line in lit_triples:
        if p == LABEL and s in concepts:
            if s in labels and sort_key(Lit(labels[s])) >= sort_key(Lit(v)):
                continue
            labels[s] = v
    lit_triples = [t for t in lit_triples if not (t[1] == LABEL and t[0] in concepts)]

    edge_preds = {p for _, p, _, _ in iri_triples} | preds
    lit_preds = {p for _, p, _, _ in lit_triples} | dprops
    clash = edge_preds & lit_preds
    if clash:
        p = sorted(clash)[0]
        line = min([ln for _, pp, _, ln in iri_triples + lit_triples if pp == p] or [0])
        raise ParseError(line, f"{p!r} is used with both IRI and literal objects")

    def ensure_auto_root():
        if not graph.is_concept(AUTO_ROOT):
            graph.add_concept(AUTO_ROOT, auto=True)
            report.concepts += 1
            report.auto_concepts += 1

    with graph.lock.write(), graph.batch():
        for p in sorted(edge_preds):
            if p not in graph._predicates:
                graph.add_predicate(p, transitive=p in transitive)
                report.predicates += 1
            elif p in transitive and not graph._predicates[p].transitive:
                graph.set_transitive(p)
        pending = sorted(lit_preds)
        while pending:
            progress = False
            for k in list(pending):
                parent = subprops.get(k)
                if parent is not None and parent not in graph._ptypes:
                    continue
                if k not in graph._ptypes:
                    graph.add_property_type(k, parent)
                    report.property_types += 1
                pending.remove(k)
                progress = True
            if not progress:
                raise CycleDetected(pending[0])

        for c in sorted(concepts):
            if not graph.is_concept(c):
                graph.add_concept(c, label=labels.get(c))
                report.concepts += 1
            elif c in labels:
                graph.set_label(c, labels[c])
        for c in sorted(subclass):
            for parent in sorted(subclass[c]):
                if parent not in graph._parents[c]:
                    graph.add_parent(c, parent)

        for s in sorted(typings):
            if graph.is_concept(s):
                raise ParseError(first_line[s], f"{s!r} is a concept and cannot be typed as an instance")
            types = typings[s]
            for t in sorted(types):
                if not graph.is_concept(t):
                    ensure_auto_root()
                    graph.add_concept(t, [AUTO_ROOT], auto=True)
                    report.concepts += 1
                    report.auto_concepts += 1
            if graph.is_instance(s):
                graph.add_types(s, types)
            else:
                graph.add_instance(s, types)
                report.instances += 1

        def ensure_node(n):
            if not graph.is_node(n):
                ensure_auto_root()
                graph.add_instance(n, [AUTO_ROOT])
                report.instances += 1

        for s, p, o, _ in sorted(iri_triples):
            ensure_node(s)
            ensure_node(o)
            if graph.edge_id(s, p, o) is None:
                graph.add_edge(s, p, o)
                report.edges += 1

        chosen = {}
        for s, k, v, _ in lit_triples:
            prev = chosen.get((s, k))
            if prev is not None:
                report.dropped_values += 1
                if sort_key(Lit(prev)) >= sort_key(Lit(v)):
                    continue
            chosen[(s, k)] = v
        for (s, k), v in sorted(chosen.items()):
            ensure_node(s)
            graph.set_property(s, k, v)
            report.properties += 1
    return report


def load_graph(path, format=None) -> Graph:
    """Fresh graph from an RDF file; format guessed from the extension."""
    if format is None:
        format = "turtle" if str(path).endswith((".ttl", ".turtle")) else "ntriples"
    g = Graph()
    import_rdf(g, path, format)
    return g
