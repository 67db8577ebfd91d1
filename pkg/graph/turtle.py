"""Reader and canonical writer for the Turtle subset used by graphs, fixtures and TurtleLight."""
from __future__ import annotations

import re

import rdflib
from rdflib import BNode, URIRef
from rdflib import Graph as RdfGraph
from rdflib import Literal as RdfLiteral
from rdflib.plugins.parsers.notation3 import BadSyntax

from graph.model import DEFAULT_PREFIXES, Graph, Iri, Literal, Term, Triple
from infra.errors import ValidationError

# Lexical forms are compared verbatim: "05"^^xsd:integer must stay "05".
rdflib.NORMALIZE_LITERALS = False

_UNBOUND_PREFIX = re.compile(r'Prefix "([^"]*):" not bound')

_PN_CHAR = "A-Za-z0-9_\u00C0-\u00D6\u00D8-\u00F6\u00F8-\u02FF\u0370-\u037D\u037F-\u1FFF"
_PN_LOCAL = re.compile(rf"[{_PN_CHAR}](?:[{_PN_CHAR}.\-]*[{_PN_CHAR}\-])?")
_PREFIXED = re.compile(r"^([A-Za-z][A-Za-z0-9_\-]*)?:(.*)$")

# Relative IRIs resolve against this base and are rejected once parsed.
NO_BASE = "http://relative.invalid/"
_BASE_DIRECTIVE = re.compile(r"(?:^|[\s.])(?:@base|[Bb][Aa][Ss][Ee])\s*<")


class TurtleSyntaxError(ValidationError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None, position: int | None = None):
        self.line = line
        self.col = col
        self.position = position
        where = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnknownPrefix(ValidationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown prefix '{name}:'")


def prefix_header(prefixes: dict) -> str:
    return "".join(f"@prefix {name}: <{ns}> .\n" for name, ns in sorted(prefixes.items()))


def expand(name: str, prefixes: dict | None = None) -> Iri:
    """Expands ``dbo:birthDate`` or ``<http://...>`` to an Iri."""
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    name = name.strip()
    if name.startswith("<") and name.endswith(">"):
        return Iri(name[1:-1])
    match = _PREFIXED.match(name)
    if match and not name.startswith(("http://", "https://", "urn:")):
        prefix = match.group(1) or ""
        if prefix not in prefixes:
            raise UnknownPrefix(prefix)
        return Iri(prefixes[prefix] + match.group(2))
    return Iri(name)


def compact_iri(iri: Iri, prefixes: dict) -> str | None:
    """Prefixed name for ``iri`` or None when no declared namespace yields a safe local name."""
    for name, ns in sorted(prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0])):
        if iri.value.startswith(ns):
            local = iri.value[len(ns):]
            if _PN_LOCAL.fullmatch(local):
                return f"{name}:{local}"
    return None


def escape_lexical(lexical: str) -> str:
    return (lexical.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t"))


def format_iri(iri: Iri, prefixes: dict) -> str:
    return compact_iri(iri, prefixes) or f"<{iri.value}>"


def format_term(term: Term, prefixes: dict) -> str:
    if isinstance(term, Iri):
        return format_iri(term, prefixes)
    text = f'"{escape_lexical(term.lexical)}"'
    if term.language:
        return f"{text}@{term.language}"
    if term.datatype:
        return f"{text}^^{format_iri(Iri(term.datatype), prefixes)}"
    return text


def _from_rdflib(node) -> Term:
    if isinstance(node, BNode):
        raise TurtleSyntaxError("blank nodes are not supported")
    if isinstance(node, URIRef):
        if str(node).startswith(NO_BASE):
            raise TurtleSyntaxError(f"relative IRI <{str(node)[len(NO_BASE):]}> (IRIs must be absolute)")
        return Iri(str(node))
    if isinstance(node, RdfLiteral):
        datatype = str(node.datatype) if node.datatype is not None else None
        return Literal(str(node), datatype, node.language or None)
    raise TurtleSyntaxError(f"unsupported term {node!r}")


def check_no_base(text: str) -> None:
    match = _BASE_DIRECTIVE.search(text)
    if match:
        raise TurtleSyntaxError("base directives are not supported", position=match.start())


def _locate(document: str, index: int, header_len: int) -> tuple:
    index = max(0, min(index, len(document)))
    line = document.count("\n", 0, index) - 1
    col = index - (document.rfind("\n", 0, index) + 1) + 1
    return line + 1, col, max(0, index - header_len)


def _translate_bad_syntax(e: BadSyntax, document: str, header_len: int) -> ValidationError:
    why = str(getattr(e, "_why", e))
    unbound = _UNBOUND_PREFIX.search(why) or _UNBOUND_PREFIX.search(str(e))
    if unbound:
        return UnknownPrefix(unbound.group(1))
    index = getattr(e, "_i", None)
    if isinstance(index, int):
        # the prefix header occupies exactly one line
        line, col, position = _locate(document, index, header_len)
        return TurtleSyntaxError(why, line, col, position)
    return TurtleSyntaxError(why)


def parse_turtle(text: str, prefixes: dict | None = None, primary_subject: Iri | None = None) -> Graph:
    """Parses the supported Turtle subset into a Graph.

    The prefix map is declared ahead of the text, so documents may use prefixed names
    without their own ``@prefix`` lines. Blank nodes, relative IRIs and base directives are
    rejected, so the result never depends on the working directory.
    """
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    check_no_base(text)
    header = " ".join(f"@prefix {name}: <{ns}> ." for name, ns in sorted(prefixes.items())) + "\n"
    document = header + text

    rdf = RdfGraph()
    try:
        rdf.parse(data=document, format="turtle", publicID=NO_BASE)
    except BadSyntax as e:
        raise _translate_bad_syntax(e, document, len(header))
    except ValidationError:
        raise
    except Exception as e:
        raise TurtleSyntaxError(str(e))

    triples = set()
    for s, p, o in rdf:
        subject = _from_rdflib(s)
        if not isinstance(subject, Iri):
            raise TurtleSyntaxError("literal in subject position")
        triples.add(Triple(subject, _from_rdflib(p), _from_rdflib(o)))
    return Graph(frozenset(triples), primary_subject)


def serialize_turtle(g: Graph, prefixes: dict | None = None) -> str:
    """Prefix header followed by one triple per line, sorted by subject, predicate and object."""
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    lines = [format_triple(t, prefixes) + "\n" for t in g.sorted()]
    return prefix_header(prefixes) + "".join(lines)


def format_triple(t: Triple, prefixes: dict | None = None) -> str:
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    return f"{format_iri(t.subject, prefixes)} {format_iri(t.predicate, prefixes)} {format_term(t.object, prefixes)} ."


def parse_triple(text: str, prefixes: dict | None = None) -> Triple:
    """Exactly one triple, as written by format_triple."""
    g = parse_turtle(text, prefixes)
    if len(g) != 1:
        raise TurtleSyntaxError(f"expected one triple, found {len(g)}")
    return next(iter(g))
