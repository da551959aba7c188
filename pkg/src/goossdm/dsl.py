"""Textual frontend: lexer, parser, name resolution, canonical formatter.

The concrete syntax, one declaration per construct:

    schema := "schema" IDENT "{" item* "}"
    item   := "esg" IDENT ";" | "annotation" IDENT ";"
            | csg | assoc | conn | link | refdecl
    csg    := "csg" IDENT "@layer" INT ["group" tuple] "{" member* "}"
    member := "contains" ["det"] ["ref"] IDENT [tuple] ";"
    tuple  := "<" P "," THETA ">"        P in {1:1,0:1,1:M,0:M,0:X,1:X}
    assoc  := "associate" IDENT "--" IDENT [tuple] ";"
    conn   := "connector" IDENT "{" ("member"|"context") IDENT [tuple] ";" ... "}"
    link   := "link" IDENT "->" IDENT ";"      (base -> derived)
    refdecl:= "ref" IDENT "->" IDENT ";"

Comments run from ``//`` to end of line. Keywords are contextual, so member
names like ``name`` or ``ref`` stay legal identifiers. The parser recovers at
the next ``;`` or ``}`` and reports every error it finds in one run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Diagnostic, SourceSpan, has_errors
from .errors import SourceError
from .model import (
    ANNOTATION,
    CSG,
    ESG,
    PARTICIPATION_VALUES,
    AnnotationNode,
    AssociationConnector,
    AssociationEdge,
    ConnectorMember,
    ConstraintTuple,
    ContainmentEdge,
    CsgNode,
    EsgNode,
    LinkEdge,
    ReferenceEdge,
    SchemaGraph,
)

# ---------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class TupleSyntax:
    p: str
    theta: int
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EsgDecl:
    name: str
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class AnnotationDecl:
    name: str
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class MemberDecl:
    name: str
    det: bool = False
    ref: bool = False
    tuple: TupleSyntax | None = None
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CsgDecl:
    name: str
    layer: int
    group: TupleSyntax | None
    members: tuple[MemberDecl, ...]
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class AssocDecl:
    left: str
    right: str
    tuple: TupleSyntax | None = None
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ConnectorEntry:
    kind: str  # "member" | "context"
    name: str
    tuple: TupleSyntax | None = None
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ConnectorDecl:
    name: str
    entries: tuple[ConnectorEntry, ...]
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LinkDecl:
    base: str
    derived: str
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RefDecl:
    source: str
    target: str
    span: SourceSpan | None = field(default=None, compare=False)


Item = EsgDecl | AnnotationDecl | CsgDecl | AssocDecl | ConnectorDecl | LinkDecl | RefDecl


@dataclass(frozen=True)
class SyntaxTree:
    name: str
    items: tuple[Item, ...]
    span: SourceSpan | None = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# lexer

IDENT = "ident"
INT = "int"
PUNCT = "punct"
EOF = "eof"

_PUNCT_TWO = ("--", "->")
_PUNCT_ONE = "{};<>,@:"


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int

    def span(self, filename: str) -> SourceSpan:
        end = self.col + max(len(self.text), 1) - 1
        return SourceSpan(filename, self.line, self.col, self.line, end)


def _lex(source: str, filename: str) -> tuple[list[_Token], list[Diagnostic]]:
    tokens: list[_Token] = []
    diags: list[Diagnostic] = []
    line, col, i, n = 1, 1, 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        two = source[i : i + 2]
        if two in _PUNCT_TWO:
            tokens.append(_Token(PUNCT, two, line, col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT_ONE:
            tokens.append(_Token(PUNCT, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(_Token(INT, source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token(IDENT, source[i:j], line, col))
            col += j - i
            i = j
            continue
        diags.append(
            Diagnostic(
                "E101",
                f"unexpected character {ch!r}",
                SourceSpan(filename, line, col, line, col),
            )
        )
        i += 1
        col += 1
    tokens.append(_Token(EOF, "", line, col))
    return tokens, diags


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, tokens: list[_Token], filename: str, diags: list[Diagnostic]):
        self.tokens = tokens
        self.filename = filename
        self.diags = diags
        self.pos = 0
        self.declared: dict[str, SourceSpan] = {}

    # token helpers

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at(IDENT, word)

    def error(self, code: str, message: str, tok: _Token | None = None) -> None:
        tok = tok or self.peek()
        self.diags.append(Diagnostic(code, message, tok.span(self.filename)))

    def expect(self, kind: str, text: str | None = None, what: str = "") -> _Token | None:
        if self.at(kind, text):
            return self.advance()
        want = what or (text or kind)
        found = self.peek().text or "end of input"
        self.error("E101", f"expected {want}, found {found!r}")
        return None

    def sync(self) -> None:
        """Panic-mode recovery: skip to the next ';' (consumed) or '}'."""
        while not self.at(EOF):
            if self.at(PUNCT, ";"):
                self.advance()
                return
            if self.at(PUNCT, "}"):
                return
            self.advance()

    def declare(self, name_tok: _Token) -> None:
        name = name_tok.text
        if name in self.declared:
            self.error("E104", f"duplicate name {name!r}", name_tok)
        else:
            self.declared[name] = name_tok.span(self.filename)

    # grammar

    def parse_schema(self) -> SyntaxTree:
        start = self.peek()
        self.expect(IDENT, "schema")
        name_tok = self.expect(IDENT, what="schema name")
        name = name_tok.text if name_tok else "<error>"
        self.expect(PUNCT, "{")
        items: list[Item] = []
        while not self.at(PUNCT, "}") and not self.at(EOF):
            item = self.parse_item()
            if item is not None:
                items.append(item)
        self.expect(PUNCT, "}")
        if not self.at(EOF):
            self.error("E101", f"trailing input after schema: {self.peek().text!r}")
        span = self._span_from(start)
        return SyntaxTree(name, tuple(items), span)

    def parse_item(self) -> Item | None:
        tok = self.peek()
        if tok.kind != IDENT:
            self.error("E101", f"expected a declaration, found {tok.text!r}")
            self.sync()
            return None
        word = tok.text
        if word in ("esg", "annotation"):
            return self.parse_simple_decl(word)
        if word == "csg":
            return self.parse_csg()
        if word == "associate":
            return self.parse_assoc()
        if word == "connector":
            return self.parse_connector()
        if word in ("link", "ref"):
            return self.parse_arrow_decl(word)
        self.error("E101", f"unknown declaration {word!r}")
        self.sync()
        return None

    def parse_simple_decl(self, word: str) -> Item | None:
        start = self.advance()
        name_tok = self.expect(IDENT, what=f"{word} name")
        if name_tok is None:
            self.sync()
            return None
        self.declare(name_tok)
        if self.expect(PUNCT, ";") is None:
            self.sync()
        span = self._span_from(start)
        if word == "esg":
            return EsgDecl(name_tok.text, span)
        return AnnotationDecl(name_tok.text, span)

    def parse_csg(self) -> CsgDecl | None:
        start = self.advance()
        name_tok = self.expect(IDENT, what="CSG name")
        if name_tok is None:
            self.sync()
            return None
        self.declare(name_tok)
        self.expect(PUNCT, "@")
        layer_word = self.expect(IDENT, "layer")
        layer = 1
        layer_tok = self.expect(INT, what="layer number")
        if layer_tok is not None:
            layer = int(layer_tok.text)
            if layer < 1:
                self.error("E101", "layer must be >= 1", layer_tok)
                layer = 1
        elif layer_word is None:
            self.sync()
            return None
        group = None
        if self.at_keyword("group"):
            self.advance()
            group = self.parse_tuple()
        if self.expect(PUNCT, "{") is None:
            self.sync()
            return None
        members: list[MemberDecl] = []
        while not self.at(PUNCT, "}") and not self.at(EOF):
            member = self.parse_member()
            if member is not None:
                members.append(member)
        self.expect(PUNCT, "}")
        return CsgDecl(name_tok.text, layer, group, tuple(members), self._span_from(start))

    def parse_member(self) -> MemberDecl | None:
        start = self.peek()
        if self.expect(IDENT, "contains") is None:
            self.sync()
            return None
        det = ref = False
        if self.at_keyword("det") and self.peek(1).kind == IDENT:
            self.advance()
            det = True
        if self.at_keyword("ref") and self.peek(1).kind == IDENT:
            self.advance()
            ref = True
        name_tok = self.expect(IDENT, what="member name")
        if name_tok is None:
            self.sync()
            return None
        tup = self.parse_tuple() if self.at(PUNCT, "<") else None
        if self.expect(PUNCT, ";") is None:
            self.sync()
        return MemberDecl(name_tok.text, det, ref, tup, self._span_from(start))

    def parse_tuple(self) -> TupleSyntax | None:
        start = self.peek()
        if self.expect(PUNCT, "<") is None:
            return None
        p_text, p_ok = self._parse_participation()
        self.expect(PUNCT, ",")
        theta, theta_ok = self._parse_theta()
        self.expect(PUNCT, ">")
        if not (p_ok and theta_ok):
            return None
        return TupleSyntax(p_text, theta, self._span_from(start))

    def _parse_participation(self) -> tuple[str, bool]:
        first = self.peek()
        if first.kind not in (INT, IDENT):
            self.error("E102", f"invalid participation value {first.text!r}", first)
            return "1:1", False
        self.advance()
        text = first.text
        if self.at(PUNCT, ":"):
            self.advance()
            second = self.peek()
            if second.kind in (INT, IDENT):
                self.advance()
                text = f"{text}:{second.text}"
        if text not in PARTICIPATION_VALUES:
            self.error("E102", f"invalid participation value {text!r}", first)
            return "1:1", False
        return text, True

    def _parse_theta(self) -> tuple[int, bool]:
        tok = self.peek()
        if tok.kind == INT and tok.text in ("0", "1"):
            self.advance()
            return int(tok.text), True
        if tok.kind in (INT, IDENT):
            self.advance()
        self.error("E103", f"invalid ordering flag {tok.text!r} (expected 0 or 1)", tok)
        return 0, False

    def parse_assoc(self) -> AssocDecl | None:
        start = self.advance()
        left = self.expect(IDENT, what="association endpoint")
        if left is None or self.expect(PUNCT, "--") is None:
            self.sync()
            return None
        right = self.expect(IDENT, what="association endpoint")
        if right is None:
            self.sync()
            return None
        tup = self.parse_tuple() if self.at(PUNCT, "<") else None
        if self.expect(PUNCT, ";") is None:
            self.sync()
        return AssocDecl(left.text, right.text, tup, self._span_from(start))

    def parse_connector(self) -> ConnectorDecl | None:
        start = self.advance()
        name_tok = self.expect(IDENT, what="connector name")
        if name_tok is None:
            self.sync()
            return None
        self.declare(name_tok)
        if self.expect(PUNCT, "{") is None:
            self.sync()
            return None
        entries: list[ConnectorEntry] = []
        has_context = False
        while not self.at(PUNCT, "}") and not self.at(EOF):
            entry_start = self.peek()
            if self.at_keyword("member") or self.at_keyword("context"):
                kind_tok = self.advance()
                entry_name = self.expect(IDENT, what="connector member name")
                if entry_name is None:
                    self.sync()
                    continue
                tup = self.parse_tuple() if self.at(PUNCT, "<") else None
                if self.expect(PUNCT, ";") is None:
                    self.sync()
                if kind_tok.text == "context":
                    if has_context:
                        self.error(
                            "E104",
                            f"connector {name_tok.text!r} declares more than one context",
                            entry_start,
                        )
                        continue
                    has_context = True
                entries.append(
                    ConnectorEntry(
                        kind_tok.text, entry_name.text, tup, self._span_from(entry_start)
                    )
                )
            else:
                self.error("E101", f"expected member or context, found {self.peek().text!r}")
                self.sync()
        self.expect(PUNCT, "}")
        return ConnectorDecl(name_tok.text, tuple(entries), self._span_from(start))

    def parse_arrow_decl(self, word: str) -> Item | None:
        start = self.advance()
        left = self.expect(IDENT, what=f"{word} source")
        if left is None or self.expect(PUNCT, "->") is None:
            self.sync()
            return None
        right = self.expect(IDENT, what=f"{word} target")
        if right is None:
            self.sync()
            return None
        if self.expect(PUNCT, ";") is None:
            self.sync()
        span = self._span_from(start)
        if word == "link":
            return LinkDecl(left.text, right.text, span)
        return RefDecl(left.text, right.text, span)

    def _span_from(self, start: _Token) -> SourceSpan:
        prev = self.tokens[max(self.pos - 1, 0)]
        end_col = prev.col + max(len(prev.text), 1) - 1
        if (prev.line, prev.col) < (start.line, start.col):
            prev, end_col = start, start.col + max(len(start.text), 1) - 1
        return SourceSpan(self.filename, start.line, start.col, prev.line, end_col)


def parse(source: str, filename: str = "<input>") -> SyntaxTree:
    """Parse DSL text into a syntax tree.

    Raises :class:`SourceError` carrying every diagnostic found; the parser
    recovers at ``;``/``}`` so one run reports multiple errors.
    """
    tokens, diags = _lex(source, filename)
    parser = _Parser(tokens, filename, diags)
    tree = parser.parse_schema()
    if has_errors(diags):
        raise SourceError(diags)
    return tree


# ---------------------------------------------------------------------------
# lowering


def _materialize(tup: TupleSyntax | None) -> ConstraintTuple:
    if tup is None:
        return ConstraintTuple()
    return ConstraintTuple(PARTICIPATION_VALUES[tup.p], tup.theta)


def lower(tree: SyntaxTree, filename: str = "<input>") -> SchemaGraph:
    """Resolve names and build the immutable schema graph.

    Raises :class:`SourceError` with E105 (unresolved name) or E106 (name
    resolves to the wrong construct kind).
    """
    diags: list[Diagnostic] = []
    kinds: dict[str, str] = {}
    for item in tree.items:
        if isinstance(item, EsgDecl):
            kinds[item.name] = ESG
        elif isinstance(item, AnnotationDecl):
            kinds[item.name] = ANNOTATION
        elif isinstance(item, CsgDecl):
            kinds[item.name] = CSG
        elif isinstance(item, ConnectorDecl):
            kinds[item.name] = "connector"

    def resolve(name: str, span: SourceSpan | None, allowed: tuple[str, ...], what: str) -> bool:
        kind = kinds.get(name)
        where = span or SourceSpan(filename)
        if kind is None:
            diags.append(Diagnostic("E105", f"unresolved name {name!r}", where))
            return False
        if kind not in allowed:
            diags.append(
                Diagnostic("E106", f"{what} {name!r} is a {kind}, expected {' or '.join(allowed)}", where)
            )
            return False
        return True

    esgs: list[EsgNode] = []
    csgs: list[CsgNode] = []
    annotations: list[AnnotationNode] = []
    containments: list[ContainmentEdge] = []
    associations: list[AssociationEdge] = []
    connectors: list[AssociationConnector] = []
    links: list[LinkEdge] = []
    references: list[ReferenceEdge] = []

    for item in tree.items:
        if isinstance(item, EsgDecl):
            esgs.append(EsgNode(item.name, item.span))
        elif isinstance(item, AnnotationDecl):
            annotations.append(AnnotationNode(item.name, item.span))
        elif isinstance(item, CsgDecl):
            group = _materialize(item.group) if item.group else None
            csgs.append(CsgNode(item.name, item.layer, group, item.span))
            for position, member in enumerate(item.members):
                allowed = (ESG, CSG) if member.ref else (ESG, CSG, ANNOTATION)
                what = "reference target" if member.ref else "member"
                if not resolve(member.name, member.span, allowed, what):
                    continue
                containments.append(
                    ContainmentEdge(
                        parent=item.name,
                        child=member.name,
                        constraint=_materialize(member.tuple),
                        is_determinant=member.det,
                        is_reference=member.ref,
                        position=position,
                        span=member.span,
                    )
                )
        elif isinstance(item, AssocDecl):
            ok = resolve(item.left, item.span, (CSG,), "association endpoint")
            ok = resolve(item.right, item.span, (CSG,), "association endpoint") and ok
            if ok:
                associations.append(
                    AssociationEdge(item.left, item.right, _materialize(item.tuple), item.span)
                )
        elif isinstance(item, ConnectorDecl):
            members: list[ConnectorMember] = []
            context: ConnectorMember | None = None
            ok = True
            for entry in item.entries:
                if not resolve(entry.name, entry.span, (CSG,), "connector member"):
                    ok = False
                    continue
                cm = ConnectorMember(entry.name, _materialize(entry.tuple))
                if entry.kind == "context":
                    context = cm
                else:
                    members.append(cm)
            if ok:
                connectors.append(
                    AssociationConnector(item.name, tuple(members), context, item.span)
                )
        elif isinstance(item, LinkDecl):
            ok = resolve(item.base, item.span, (CSG,), "link base")
            ok = resolve(item.derived, item.span, (CSG,), "link derived") and ok
            if ok:
                links.append(LinkEdge(item.base, item.derived, item.span))
        elif isinstance(item, RefDecl):
            src_kind = kinds.get(item.source)
            tgt_kind = kinds.get(item.target)
            ok = resolve(item.source, item.span, (ESG, CSG), "reference source")
            ok = resolve(item.target, item.span, (ESG, CSG), "reference target") and ok
            if ok and src_kind != tgt_kind:
                diags.append(
                    Diagnostic(
                        "E106",
                        f"reference {item.source!r} -> {item.target!r} joins a "
                        f"{src_kind} to a {tgt_kind}; kinds must match",
                        item.span or SourceSpan(filename),
                    )
                )
                ok = False
            if ok:
                references.append(ReferenceEdge(item.source, item.target, item.span))

    if has_errors(diags):
        raise SourceError(diags)
    return SchemaGraph(
        name=tree.name,
        esgs=tuple(esgs),
        csgs=tuple(csgs),
        annotations=tuple(annotations),
        containments=tuple(containments),
        associations=tuple(associations),
        connectors=tuple(connectors),
        links=tuple(links),
        references=tuple(references),
    )


def compile_source(source: str, filename: str = "<input>") -> SchemaGraph:
    """parse + lower in one step."""
    return lower(parse(source, filename), filename)


# ---------------------------------------------------------------------------
# formatter


def _fmt_tuple(tup: TupleSyntax | None) -> str:
    if tup is None:
        return "<1:1,0>"
    return f"<{tup.p},{tup.theta}>"


def format_tree(tree: SyntaxTree) -> str:
    """Canonical layout: 2-space indent, one declaration per line, every
    constraint tuple written out explicitly. Idempotent."""
    out: list[str] = [f"schema {tree.name} {{"]
    for item in tree.items:
        if isinstance(item, EsgDecl):
            out.append(f"  esg {item.name};")
        elif isinstance(item, AnnotationDecl):
            out.append(f"  annotation {item.name};")
        elif isinstance(item, CsgDecl):
            head = f"  csg {item.name} @layer {item.layer}"
            if item.group is not None:
                head += f" group {_fmt_tuple(item.group)}"
            out.append(head + " {")
            for member in item.members:
                words = ["contains"]
                if member.det:
                    words.append("det")
                if member.ref:
                    words.append("ref")
                words.append(member.name)
                words.append(_fmt_tuple(member.tuple))
                out.append("    " + " ".join(words) + ";")
            out.append("  }")
        elif isinstance(item, AssocDecl):
            out.append(f"  associate {item.left} -- {item.right} {_fmt_tuple(item.tuple)};")
        elif isinstance(item, ConnectorDecl):
            out.append(f"  connector {item.name} {{")
            for entry in item.entries:
                out.append(f"    {entry.kind} {entry.name} {_fmt_tuple(entry.tuple)};")
            out.append("  }")
        elif isinstance(item, LinkDecl):
            out.append(f"  link {item.base} -> {item.derived};")
        elif isinstance(item, RefDecl):
            out.append(f"  ref {item.source} -> {item.target};")
    out.append("}")
    return "\n".join(out) + "\n"
