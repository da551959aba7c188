"""Abstract syntax and canonical text form for the emitted XSD subset.

The subset covers exactly what the transformation produces: global elements,
inline and named complex types, sequence/all compositors, choices, single
inheritance via complexContent/extension, element references, mixed content,
and minOccurs/maxOccurs. Emission is canonical and byte-deterministic;
``read`` accepts any whitespace and attribute order within the subset, so
``read(emit(doc)) == doc`` and golden comparisons are layout-insensitive.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import XsdError

XS_URI = "http://www.w3.org/2001/XMLSchema"
_XS = "{%s}" % XS_URI

UNBOUNDED = None  # sentinel for Occurs.max


@dataclass(frozen=True)
class Occurs:
    """minOccurs/maxOccurs bounds; ``max=None`` means unbounded."""

    min: int = 1
    max: int | None = 1

    def __post_init__(self) -> None:
        if self.min < 0:
            raise XsdError("E402", f"minOccurs must be >= 0, got {self.min}")
        if self.max is not None and self.max < 1:
            raise XsdError("E402", f"maxOccurs must be >= 1 or unbounded, got {self.max}")
        if self.max is not None and self.min > self.max:
            raise XsdError("E402", f"minOccurs {self.min} exceeds maxOccurs {self.max}")

    @property
    def is_default(self) -> bool:
        return self.min == 1 and self.max == 1

    @property
    def max_text(self) -> str:
        return "unbounded" if self.max is None else str(self.max)

    def to_json(self) -> list:
        return [self.min, "unbounded" if self.max is None else self.max]


@dataclass(frozen=True)
class XsdElement:
    """An element particle or global declaration.

    Exactly one content form applies: a type name, a reference to a global
    element, or inline content (an optional complex type; a bare leaf when
    absent).
    """

    name: str | None = None
    type_name: str | None = None
    ref: str | None = None
    occurs: Occurs = Occurs()
    content: "XsdComplexType | None" = None

    def __post_init__(self) -> None:
        forms = sum(x is not None for x in (self.type_name, self.ref, self.content))
        if forms > 1:
            raise XsdError("E402", "element combines type, ref, and inline content")
        if self.ref is not None and self.name is not None:
            raise XsdError("E402", "a referencing element carries no name of its own")
        if self.ref is None and not self.name:
            raise XsdError("E402", "element needs a name or a ref")


@dataclass(frozen=True)
class XsdGroup:
    """sequence/all compositor."""

    kind: str = "sequence"
    occurs: Occurs = Occurs()
    children: tuple["XsdParticle", ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("sequence", "all"):
            raise XsdError("E402", f"unknown compositor {self.kind!r}")
        if self.kind == "all":
            for child in self.children:
                if child.occurs.max is None or child.occurs.max > 1:
                    raise XsdError(
                        "E402", "children of an all group may occur at most once"
                    )


@dataclass(frozen=True)
class XsdChoice:
    occurs: Occurs = Occurs()
    children: tuple["XsdParticle", ...] = ()


XsdParticle = Union[XsdElement, XsdGroup, XsdChoice]


@dataclass(frozen=True)
class XsdExtension:
    """Single inheritance: extends a named complex type with extra content."""

    base: str
    content: XsdGroup | XsdChoice | None = None


@dataclass(frozen=True)
class XsdComplexType:
    name: str | None = None
    mixed: bool = False
    content: XsdGroup | XsdChoice | XsdExtension | None = None


@dataclass(frozen=True)
class XsdDocument:
    """Ordered global elements and named complex types under one xs:schema."""

    elements: tuple[XsdElement, ...] = ()
    types: tuple[XsdComplexType, ...] = ()

    def element(self, name: str) -> XsdElement | None:
        for el in self.elements:
            if el.name == name:
                return el
        return None

    def type(self, name: str) -> XsdComplexType | None:
        for ct in self.types:
            if ct.name == name:
                return ct
        return None

    def walk(self) -> Iterator[object]:
        """Every node of the document in document order."""

        def visit(node) -> Iterator[object]:
            yield node
            if isinstance(node, XsdElement) and node.content is not None:
                yield from visit(node.content)
            elif isinstance(node, XsdComplexType) and node.content is not None:
                yield from visit(node.content)
            elif isinstance(node, XsdExtension) and node.content is not None:
                yield from visit(node.content)
            elif isinstance(node, (XsdGroup, XsdChoice)):
                for child in node.children:
                    yield from visit(child)

        for el in self.elements:
            yield from visit(el)
        for ct in self.types:
            yield from visit(ct)


def validate_document(doc: XsdDocument) -> None:
    """Enforce document invariants; raises :class:`XsdError` on violation."""
    element_names: set[str] = set()
    for el in doc.elements:
        if el.name in element_names:
            raise XsdError("E402", f"duplicate global element {el.name!r}")
        element_names.add(el.name or "")
    type_names: set[str] = set()
    for ct in doc.types:
        if not ct.name:
            raise XsdError("E402", "global complex types must be named")
        if ct.name in type_names:
            raise XsdError("E402", f"duplicate named type {ct.name!r}")
        type_names.add(ct.name)
    for node in doc.walk():
        if isinstance(node, XsdElement):
            if node.ref is not None and node.ref not in element_names:
                raise XsdError("E402", f"unresolved element reference {node.ref!r}")
            if node.type_name not in (None, "xs:ID") and node.type_name not in type_names:
                raise XsdError("E402", f"unresolved type {node.type_name!r}")
        elif isinstance(node, XsdExtension):
            if node.base not in type_names:
                raise XsdError("E402", f"unresolved extension base {node.base!r}")


# ---------------------------------------------------------------------------
# emission


def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _attrs(
    name: str | None = None,
    type_name: str | None = None,
    ref: str | None = None,
    base: str | None = None,
    mixed: bool = False,
    occurs: Occurs | None = None,
) -> str:
    # Canonical attribute order: name, type, ref, base, mixed, minOccurs, maxOccurs.
    parts: list[str] = []
    if name is not None:
        parts.append(f'name="{_escape(name)}"')
    if type_name is not None:
        parts.append(f'type="{_escape(type_name)}"')
    if ref is not None:
        parts.append(f'ref="{_escape(ref)}"')
    if base is not None:
        parts.append(f'base="{_escape(base)}"')
    if mixed:
        parts.append('mixed="true"')
    if occurs is not None and not occurs.is_default:
        if occurs.min != 1:
            parts.append(f'minOccurs="{occurs.min}"')
        if occurs.max != 1:
            parts.append(f'maxOccurs="{occurs.max_text}"')
    return (" " + " ".join(parts)) if parts else ""


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = []

    def tag(self, depth: int, name: str, attrs: str, children) -> None:
        pad = "  " * depth
        if not children:
            self.lines.append(f"{pad}<{name}{attrs} />")
            return
        self.lines.append(f"{pad}<{name}{attrs}>")
        for emit_child in children:
            emit_child(depth + 1)
        self.lines.append(f"{pad}</{name}>")


def emit(doc: XsdDocument) -> str:
    """Serialize to the canonical text form (deterministic bytes)."""
    validate_document(doc)
    writer = _Writer()

    def element_emitter(el: XsdElement):
        def run(depth: int) -> None:
            attrs = _attrs(name=el.name, type_name=el.type_name, ref=el.ref, occurs=el.occurs)
            children = [complex_type_emitter(el.content)] if el.content is not None else []
            writer.tag(depth, "xs:element", attrs, children)

        return run

    def complex_type_emitter(ct: XsdComplexType):
        def run(depth: int) -> None:
            attrs = _attrs(name=ct.name, mixed=ct.mixed)
            children = [content_emitter(ct.content)] if ct.content is not None else []
            writer.tag(depth, "xs:complexType", attrs, children)

        return run

    def content_emitter(content):
        if isinstance(content, XsdExtension):
            return extension_emitter(content)
        return group_emitter(content)

    def extension_emitter(ext: XsdExtension):
        def run(depth: int) -> None:
            def inner(d: int) -> None:
                children = [group_emitter(ext.content)] if ext.content is not None else []
                writer.tag(d, "xs:extension", _attrs(base=ext.base), children)

            writer.tag(depth, "xs:complexContent", "", [inner])

        return run

    def group_emitter(group):
        def run(depth: int) -> None:
            tag = "xs:choice" if isinstance(group, XsdChoice) else f"xs:{group.kind}"
            children = [particle_emitter(child) for child in group.children]
            writer.tag(depth, tag, _attrs(occurs=group.occurs), children)

        return run

    def particle_emitter(particle):
        if isinstance(particle, XsdElement):
            return element_emitter(particle)
        return group_emitter(particle)

    top = [complex_type_emitter(ct) for ct in doc.types]
    top += [element_emitter(el) for el in doc.elements]
    writer.tag(0, "xs:schema", f' xmlns:xs="{XS_URI}"', top)
    return "\n".join(writer.lines) + "\n"


# ---------------------------------------------------------------------------
# reading


def _occurs_of(node: ET.Element) -> Occurs:
    min_text = node.get("minOccurs", "1")
    max_text = node.get("maxOccurs", "1")
    try:
        min_val = int(min_text)
    except ValueError:
        raise XsdError("E402", f"bad minOccurs {min_text!r}") from None
    if max_text == "unbounded":
        max_val: int | None = None
    else:
        try:
            max_val = int(max_text)
        except ValueError:
            raise XsdError("E402", f"bad maxOccurs {max_text!r}") from None
    return Occurs(min_val, max_val)


def _check_attrs(node: ET.Element, allowed: set[str]) -> None:
    for key in node.attrib:
        if key not in allowed:
            raise XsdError("E402", f"attribute {key!r} on {node.tag} is outside the subset")


def _no_text(node: ET.Element) -> None:
    if node.text and node.text.strip():
        raise XsdError("E402", f"unexpected text content in {node.tag}")
    for child in node:
        if child.tail and child.tail.strip():
            raise XsdError("E402", f"unexpected text content in {node.tag}")


def _read_element(node: ET.Element) -> XsdElement:
    _check_attrs(node, {"name", "type", "ref", "minOccurs", "maxOccurs"})
    _no_text(node)
    content: XsdComplexType | None = None
    for child in node:
        if child.tag == _XS + "complexType":
            if content is not None:
                raise XsdError("E402", "element with more than one complexType")
            content = _read_complex_type(child, named=False)
        else:
            raise XsdError("E402", f"{child.tag} inside xs:element is outside the subset")
    return XsdElement(
        name=node.get("name"),
        type_name=node.get("type"),
        ref=node.get("ref"),
        occurs=_occurs_of(node),
        content=content,
    )


def _read_group(node: ET.Element) -> XsdGroup | XsdChoice:
    _check_attrs(node, {"minOccurs", "maxOccurs"})
    _no_text(node)
    children: list[XsdParticle] = []
    for child in node:
        if child.tag == _XS + "element":
            children.append(_read_element(child))
        elif child.tag in (_XS + "sequence", _XS + "all", _XS + "choice"):
            children.append(_read_group(child))
        else:
            raise XsdError("E402", f"{child.tag} inside a compositor is outside the subset")
    occurs = _occurs_of(node)
    if node.tag == _XS + "choice":
        return XsdChoice(occurs, tuple(children))
    kind = "sequence" if node.tag == _XS + "sequence" else "all"
    return XsdGroup(kind, occurs, tuple(children))


def _read_complex_type(node: ET.Element, named: bool) -> XsdComplexType:
    _check_attrs(node, {"name", "mixed"} if named else {"mixed"})
    _no_text(node)
    mixed = node.get("mixed", "false") == "true"
    content: XsdGroup | XsdChoice | XsdExtension | None = None

    def set_content(value) -> None:
        nonlocal content
        if content is not None:
            raise XsdError("E402", "complexType with more than one content model")
        content = value

    for child in node:
        if child.tag in (_XS + "sequence", _XS + "all", _XS + "choice"):
            set_content(_read_group(child))
        elif child.tag == _XS + "complexContent":
            _check_attrs(child, set())
            _no_text(child)
            inner = list(child)
            if len(inner) != 1 or inner[0].tag != _XS + "extension":
                raise XsdError(
                    "E402", "complexContent must hold exactly one xs:extension"
                )
            ext = inner[0]
            _check_attrs(ext, {"base"})
            _no_text(ext)
            base = ext.get("base")
            if not base:
                raise XsdError("E402", "xs:extension without a base")
            ext_content: XsdGroup | XsdChoice | None = None
            for ext_child in ext:
                if ext_child.tag in (_XS + "sequence", _XS + "all", _XS + "choice"):
                    if ext_content is not None:
                        raise XsdError("E402", "extension with more than one content model")
                    ext_content = _read_group(ext_child)
                else:
                    raise XsdError(
                        "E402", f"{ext_child.tag} inside xs:extension is outside the subset"
                    )
            set_content(XsdExtension(base, ext_content))
        else:
            raise XsdError(
                "E402", f"{child.tag} inside xs:complexType is outside the subset"
            )
    return XsdComplexType(name=node.get("name"), mixed=mixed, content=content)


def read(text: str) -> XsdDocument:
    """Parse subset XSD text back into a document value.

    Raises :class:`XsdError` with E401 for malformed XML and E402 for any
    construct outside the subset. ``read(emit(d))`` equals ``d``.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise XsdError("E401", f"malformed XML: {exc}") from None
    if root.tag != _XS + "schema":
        raise XsdError("E402", f"root element is {root.tag}, expected xs:schema")
    _check_attrs(root, set())
    _no_text(root)
    elements: list[XsdElement] = []
    types: list[XsdComplexType] = []
    for child in root:
        if child.tag == _XS + "element":
            elements.append(_read_element(child))
        elif child.tag == _XS + "complexType":
            types.append(_read_complex_type(child, named=True))
        else:
            raise XsdError("E402", f"top-level {child.tag} is outside the subset")
    doc = XsdDocument(tuple(elements), tuple(types))
    validate_document(doc)
    return doc


def structurally_equal(text_a: str, text_b: str) -> bool:
    """Whitespace- and attribute-order-insensitive document comparison."""
    return read(text_a) == read(text_b)
