"""Instance documents: seeded generation from an XSD-subset document,
conformance validation against it, and a random schema generator for
property tests.

Validation runs in two passes per element. A nondeterministic matcher
decides whether the child sequence fits the content model at all (so
ambiguous models never cause false rejections); only when it does not does a
deterministic diagnostic walk assign coded violations. Sequences restart
their particle list on every group repetition, so a repeated unit like
(leaf, nested, choice) inside one parent validates.
"""

from __future__ import annotations

import random
import string
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from itertools import count as _counter

from .dsl import compile_source
from .errors import XsdError
from .model import SchemaGraph
from .xsd import (
    XsdChoice,
    XsdComplexType,
    XsdDocument,
    XsdElement,
    XsdExtension,
    XsdGroup,
)

ID_TYPE = "xs:ID"


# ---------------------------------------------------------------------------
# XML document tree


@dataclass(frozen=True)
class XmlElement:
    """Element with ordered mixed content: child elements and text segments."""

    name: str
    content: tuple["XmlElement | str", ...] = ()

    @property
    def children(self) -> tuple["XmlElement", ...]:
        return tuple(item for item in self.content if isinstance(item, XmlElement))

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(item for item in self.content if isinstance(item, str))

    @property
    def text(self) -> str:
        return "".join(self.texts)


XmlDoc = XmlElement  # a document is its root element


def read_xml(text: str) -> XmlElement:
    """Parse an XML document into the element tree (comments dropped)."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise XsdError("E401", f"malformed XML: {exc}") from None
    return _from_et(root)


def _from_et(node: ET.Element) -> XmlElement:
    content: list[XmlElement | str] = []
    if node.text:
        content.append(node.text)
    for child in node:
        content.append(_from_et(child))
        if child.tail:
            content.append(child.tail)
    return XmlElement(node.tag, tuple(content))


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_xml(root: XmlElement) -> str:
    """Canonical serialization: element-only content is indented block-wise,
    mixed and leaf content stays inline. Deterministic bytes."""
    lines: list[str] = []

    def inline(elem: XmlElement) -> str:
        if not elem.content:
            return f"<{elem.name} />"
        body = "".join(
            inline(item) if isinstance(item, XmlElement) else _escape(item)
            for item in elem.content
        )
        return f"<{elem.name}>{body}</{elem.name}>"

    def block(elem: XmlElement, depth: int) -> None:
        pad = "  " * depth
        if any(isinstance(item, str) and item.strip() for item in elem.content):
            lines.append(pad + inline(elem))
            return
        children = elem.children
        if not children:
            text = elem.text
            if text.strip():
                lines.append(f"{pad}<{elem.name}>{_escape(text)}</{elem.name}>")
            else:
                lines.append(f"{pad}<{elem.name} />")
            return
        lines.append(f"{pad}<{elem.name}>")
        for child in children:
            block(child, depth + 1)
        lines.append(f"{pad}</{elem.name}>")

    block(root, 0)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# conformance report


@dataclass(frozen=True)
class Violation:
    path: str
    code: str
    message: str

    def to_json(self) -> dict:
        return {"path": self.path, "code": self.code, "message": self.message}


@dataclass(frozen=True)
class ConformanceReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}


# ---------------------------------------------------------------------------
# compiled content models


@dataclass(frozen=True)
class _PElem:
    name: str
    min: int
    max: int | None
    decl: XsdElement  # resolved declaration (ref targets resolved)


@dataclass(frozen=True)
class _PGroup:
    kind: str  # sequence | all | choice
    min: int
    max: int | None
    parts: tuple["_Particle", ...]


_Particle = _PElem | _PGroup


@dataclass(frozen=True)
class _DeclInfo:
    name: str
    is_id: bool
    is_leaf: bool
    mixed: bool
    model: _PGroup | None
    by_name: dict  # child element name -> declaration XsdElement


class _Compiled:
    """Per-document compilation: resolved declarations and content models."""

    def __init__(self, doc: XsdDocument):
        self.doc = doc
        self.globals = {el.name: el for el in doc.elements if el.name}
        self.types = {ct.name: ct for ct in doc.types if ct.name}
        self._info: dict[int, _DeclInfo] = {}

    def resolve(self, decl: XsdElement) -> XsdElement:
        seen: set[int] = set()
        while decl.ref is not None:
            if id(decl) in seen:
                raise XsdError("E402", f"reference cycle at {decl.ref!r}")
            seen.add(id(decl))
            target = self.globals.get(decl.ref)
            if target is None:
                raise XsdError("E402", f"unresolved element reference {decl.ref!r}")
            decl = target
        return decl

    def info(self, decl: XsdElement) -> _DeclInfo:
        cached = self._info.get(id(decl))
        if cached is not None:
            return cached
        if decl.ref is not None:
            target = self.globals.get(decl.ref)
            if target is None:
                raise XsdError("E402", f"unresolved element reference {decl.ref!r}")
            info = self.info(target)
        else:
            info = self._build_info(decl)
        self._info[id(decl)] = info
        return info

    def _build_info(self, decl: XsdElement) -> _DeclInfo:
        name = decl.name or ""
        if decl.type_name == ID_TYPE:
            return _DeclInfo(name, True, True, False, None, {})
        ct, mixed = self._resolve_ct(decl)
        if ct is None:
            return _DeclInfo(name, False, True, False, None, {})
        model = self._compile_ct(ct)
        by_name: dict[str, XsdElement] = {}
        if model is not None:
            for part in _iter_elems(model):
                by_name.setdefault(part.name, part.decl)
        return _DeclInfo(name, False, False, mixed, model, by_name)

    def _resolve_ct(self, decl: XsdElement) -> tuple[XsdComplexType | None, bool]:
        if decl.content is not None:
            return decl.content, decl.content.mixed
        if decl.type_name is not None:
            ct = self.types.get(decl.type_name)
            if ct is None:
                raise XsdError("E402", f"unresolved type {decl.type_name!r}")
            return ct, self._mixed_of(ct, frozenset())
        return None, False

    def _mixed_of(self, ct: XsdComplexType, seen: frozenset) -> bool:
        if ct.mixed:
            return True
        if isinstance(ct.content, XsdExtension) and ct.content.base not in seen:
            base = self.types.get(ct.content.base)
            if base is not None:
                return self._mixed_of(base, seen | {ct.content.base})
        return False

    def _compile_ct(self, ct: XsdComplexType, seen: frozenset = frozenset()) -> _PGroup | None:
        content = ct.content
        if content is None:
            return None
        if isinstance(content, XsdExtension):
            if content.base in seen:
                raise XsdError("E402", f"extension cycle through {content.base!r}")
            base_ct = self.types.get(content.base)
            base_model = (
                self._compile_ct(base_ct, seen | {content.base}) if base_ct is not None else None
            )
            own = self._compile_group(content.content) if content.content is not None else None
            parts = tuple(p for p in (base_model, own) if p is not None)
            if not parts:
                return None
            if len(parts) == 1 and isinstance(parts[0], _PGroup):
                return parts[0]
            return _PGroup("sequence", 1, 1, parts)
        return self._compile_group(content)

    def _compile_group(self, group) -> _PGroup:
        kind = "choice" if isinstance(group, XsdChoice) else group.kind
        parts: list[_Particle] = []
        for child in group.children:
            if isinstance(child, XsdElement):
                if child.ref is not None:
                    target = self.globals.get(child.ref)
                    if target is None:
                        raise XsdError("E402", f"unresolved element reference {child.ref!r}")
                    parts.append(
                        _PElem(child.ref, child.occurs.min, child.occurs.max, target)
                    )
                else:
                    parts.append(
                        _PElem(child.name or "", child.occurs.min, child.occurs.max, child)
                    )
            else:
                parts.append(self._compile_group(child))
        return _PGroup(kind, group.occurs.min, group.occurs.max, tuple(parts))


def _iter_elems(part: _Particle):
    if isinstance(part, _PElem):
        yield part
    else:
        for child in part.parts:
            yield from _iter_elems(child)


def _first_names(part: _Particle) -> set[str]:
    """Element names that can start one occurrence of the particle."""
    if isinstance(part, _PElem):
        return {part.name}
    names: set[str] = set()
    if part.kind == "sequence":
        for child in part.parts:
            names |= _first_names(child)
            if not _nullable(child):
                break
        return names
    for child in part.parts:
        names |= _first_names(child)
    return names


def _nullable(part: _Particle) -> bool:
    """Whether one occurrence of the particle can match nothing."""
    if isinstance(part, _PElem):
        return part.min == 0
    if part.min == 0:
        return True
    return _unit_nullable(part)


def _unit_nullable(group: _PGroup) -> bool:
    if group.kind == "choice":
        return any(_nullable(p) for p in group.parts)
    return all(_nullable(p) for p in group.parts)


def _model_names(model: _PGroup) -> set[str]:
    return {e.name for e in _iter_elems(model)}


# ---------------------------------------------------------------------------
# nondeterministic matcher (validity)


def _match_ends(part: _Particle, names: list[str], start: int, memo: dict) -> frozenset[int]:
    key = (id(part), start)
    cached = memo.get(key)
    if cached is not None:
        return cached
    memo[key] = frozenset()  # cycle guard for nullable self-recursion
    if isinstance(part, _PElem):
        ends = set()
        if part.min == 0:
            ends.add(start)
        pos, matched = start, 0
        while pos < len(names) and names[pos] == part.name and (part.max is None or matched < part.max):
            pos += 1
            matched += 1
            if matched >= part.min:
                ends.add(pos)
        result = frozenset(ends)
    else:
        result = _group_ends(part, names, start, memo)
    memo[key] = result
    return result


def _unit_ends(group: _PGroup, names: list[str], start: int, memo: dict) -> frozenset[int]:
    if group.kind == "sequence":
        positions = {start}
        for part in group.parts:
            nxt: set[int] = set()
            for pos in positions:
                nxt |= _match_ends(part, names, pos, memo)
            positions = nxt
            if not positions:
                break
        return frozenset(positions)
    if group.kind == "choice":
        ends: set[int] = set()
        for part in group.parts:
            ends |= _match_ends(part, names, start, memo)
        return frozenset(ends)
    # all: parts in any order, each per its own occurrence bounds
    states: set[tuple[int, frozenset[int]]] = {(start, frozenset())}
    complete: set[int] = set()
    required = {i for i, p in enumerate(group.parts) if not _nullable(p)}
    seen_states = set(states)
    while states:
        nxt_states: set[tuple[int, frozenset[int]]] = set()
        for pos, used in states:
            if required <= used:
                complete.add(pos)
            for i, part in enumerate(group.parts):
                if i in used:
                    continue
                for end in _match_ends(part, names, pos, memo):
                    if end == pos:
                        continue  # empty matches only matter for completeness
                    state = (end, used | {i})
                    if state not in seen_states:
                        seen_states.add(state)
                        nxt_states.add(state)
        states = nxt_states
    return frozenset(complete)


def _group_ends(group: _PGroup, names: list[str], start: int, memo: dict) -> frozenset[int]:
    results: set[int] = set()
    nullable_unit = _unit_nullable(group)
    if group.min == 0 or nullable_unit:
        results.add(start)
    positions = frozenset([start])
    max_units = group.max if group.max is not None else max(group.min, len(names) - start + 1)
    seen_positions: set[int] = set(positions)
    units = 0
    while positions and units < max_units:
        nxt: set[int] = set()
        for pos in positions:
            nxt |= _unit_ends(group, names, pos, memo)
        units += 1
        if units >= group.min or nullable_unit:
            results |= nxt
        new_positions = frozenset(p for p in nxt if p not in seen_positions)
        seen_positions |= nxt
        if not new_positions and units >= group.min:
            break
        positions = frozenset(nxt)
    return frozenset(results)


def _matches(model: _PGroup, names: list[str]) -> bool:
    memo: dict = {}
    return len(names) in _match_ends(model, names, 0, memo)


# ---------------------------------------------------------------------------
# deterministic diagnostic walk (runs only when _matches failed)


class _Diagnoser:
    def __init__(self, model: _PGroup, path: str, out: list[Violation]):
        self.model = model
        self.names = _model_names(model)
        self.path = path
        self.out = out

    def emit(self, code: str, message: str) -> None:
        self.out.append(Violation(self.path, code, message))

    def run(self, children: list[XmlElement]) -> None:
        before = len(self.out)
        self.group(self.model, children)
        if len(self.out) == before:
            self.emit("V601", "content does not match the declared model")

    def group(self, group: _PGroup, children: list[XmlElement]) -> None:
        n = len(children)
        gmin, gmax = group.min, group.max
        first = _first_names(group)
        if n == 0:
            if gmin >= 1 and not _unit_nullable(group):
                code = "V604" if group.kind == "choice" else "V603"
                what = (
                    "expected exactly one branch of the choice"
                    if group.kind == "choice"
                    else f"required content group absent (minOccurs {gmin})"
                )
                self.emit(code, what)
            return
        pos, units = 0, 0
        while pos < n:
            if gmax is not None and units >= gmax:
                child = children[pos]
                if group.kind == "choice" and child.name in first:
                    self.emit(
                        "V604",
                        f"more than one choice branch instantiated ({child.name} is extra)",
                    )
                elif child.name in first:
                    self.emit(
                        "V603",
                        f"content group repeats more than maxOccurs {gmax} (at {child.name})",
                    )
                else:
                    self.emit("V601", f"unexpected element {child.name}")
                pos += 1
                continue
            can_restart = gmax is None or units + 1 < gmax
            new_pos = self.unit(group, children, pos, can_restart)
            if new_pos == pos:
                self.emit("V601", f"unexpected element {children[pos].name}")
                pos += 1
                continue
            pos = new_pos
            units += 1
        if units < gmin and not _unit_nullable(group):
            if group.kind == "choice":
                self.emit("V604", "expected exactly one branch of the choice")
            else:
                self.emit(
                    "V603", f"content group occurs {units} time(s), minimum is {gmin}"
                )

    def unit(self, group: _PGroup, children, pos: int, can_restart: bool) -> int:
        first = _first_names(group)
        if group.kind == "sequence":
            for part in group.parts:
                pos = self.particle(part, children, pos, can_restart, first)
            return pos
        if group.kind == "choice":
            n = len(children)
            if pos < n and children[pos].name in first:
                for part in group.parts:
                    if children[pos].name in _first_names(part):
                        return self.particle(part, children, pos, False, first)
            return pos
        return self.all_unit(group, children, pos)

    def particle(
        self, part: _Particle, children, pos: int, can_restart: bool, group_first: set[str]
    ) -> int:
        n = len(children)
        if isinstance(part, _PGroup):
            return self.group_particle(part, children, pos)
        matched = 0
        while True:
            while (
                pos < n
                and children[pos].name == part.name
                and (part.max is None or matched < part.max)
            ):
                pos += 1
                matched += 1
            if matched >= part.min:
                break
            if pos < n and children[pos].name not in self.names:
                self.emit("V601", f"unexpected element {children[pos].name}")
                pos += 1
                continue
            if matched == 0:
                self.emit("V602", f"missing required element {part.name}")
            else:
                self.emit(
                    "V603",
                    f"element {part.name} occurs {matched} time(s), minimum is {part.min}",
                )
            break
        if (
            part.max is not None
            and matched == part.max
            and pos < n
            and children[pos].name == part.name
            and not (can_restart and part.name in group_first)
        ):
            extra = 0
            while pos < n and children[pos].name == part.name:
                pos += 1
                extra += 1
            self.emit(
                "V603",
                f"element {part.name} occurs {matched + extra} time(s), maximum is {part.max}",
            )
        return pos

    def group_particle(self, group: _PGroup, children, pos: int) -> int:
        n = len(children)
        first = _first_names(group)
        units = 0
        while (
            pos < n
            and children[pos].name in first
            and (group.max is None or units < group.max)
        ):
            can_restart = group.max is None or units + 1 < group.max
            new_pos = self.unit(group, children, pos, can_restart)
            if new_pos == pos:
                break
            pos = new_pos
            units += 1
        if units < group.min and not _unit_nullable(group):
            if group.kind == "choice":
                branches = ", ".join(sorted(first))
                self.emit("V604", f"expected exactly one of: {branches}")
            else:
                self.emit("V602", "missing required content group")
        if (
            group.kind == "choice"
            and group.max is not None
            and units >= group.max
            and pos < n
            and children[pos].name in first
        ):
            self.emit(
                "V604",
                f"more than one choice branch instantiated ({children[pos].name} is extra)",
            )
            while pos < n and children[pos].name in first:
                pos += 1
        return pos

    def all_unit(self, group: _PGroup, children, pos: int) -> int:
        n = len(children)
        counts: dict[int, int] = {}
        while pos < n:
            name = children[pos].name
            index, part = next(
                ((i, p) for i, p in enumerate(group.parts) if name in _first_names(p)),
                (None, None),
            )
            if part is None:
                if name in self.names:
                    break
                self.emit("V601", f"unexpected element {name}")
                pos += 1
                continue
            limit = part.max if isinstance(part, _PElem) else 1
            if limit is not None and counts.get(index, 0) >= limit:
                self.emit("V603", f"element {name} repeats beyond its bounds")
                pos += 1
                continue
            if isinstance(part, _PElem):
                pos += 1
            else:
                new_pos = self.unit(part, children, pos, False)
                if new_pos == pos:
                    break
                pos = new_pos
            counts[index] = counts.get(index, 0) + 1
        for index, part in enumerate(group.parts):
            if not _nullable(part) and counts.get(index, 0) == 0:
                name = next(iter(_first_names(part)), "?")
                self.emit("V602", f"missing required element {name}")
        return pos


# ---------------------------------------------------------------------------
# instance validation


def validate_instance(doc: XsdDocument, xml: XmlElement) -> ConformanceReport:
    """Recursive conformance check of one document against the subset."""
    compiled = _Compiled(doc)
    violations: list[Violation] = []
    ids: dict[str, str] = {}
    root_decl = compiled.globals.get(xml.name)
    if root_decl is None:
        violations.append(
            Violation("/", "V601", f"unexpected root element {xml.name}")
        )
    else:
        _validate_element(compiled, xml, root_decl, f"/{xml.name}", violations, ids)
    return ConformanceReport(tuple(violations))


def _validate_element(
    compiled: _Compiled,
    elem: XmlElement,
    decl: XsdElement,
    path: str,
    out: list[Violation],
    ids: dict[str, str],
) -> None:
    info = compiled.info(decl)
    if info.is_id:
        for child in elem.children:
            out.append(Violation(path, "V601", f"unexpected element {child.name} in ID value"))
        value = elem.text.strip()
        previous = ids.get(value)
        if previous is not None:
            out.append(
                Violation(path, "V605", f"duplicate ID value {value!r} (first at {previous})")
            )
        else:
            ids[value] = path
        return
    if info.is_leaf:
        for child in elem.children:
            out.append(
                Violation(path, "V601", f"unexpected element {child.name} in leaf content")
            )
        return
    if not info.mixed and any(t.strip() for t in elem.texts):
        snippet = next(t.strip() for t in elem.texts if t.strip())
        out.append(
            Violation(
                path, "V606", f"text {snippet[:30]!r} in non-mixed content"
            )
        )
    children = list(elem.children)
    if info.model is None:
        for child in children:
            out.append(Violation(path, "V601", f"unexpected element {child.name}"))
        return
    names = [c.name for c in children]
    if not _matches(info.model, names):
        _Diagnoser(info.model, path, out).run(children)
    ordinals: dict[str, int] = {}
    for child in children:
        ordinals[child.name] = ordinals.get(child.name, 0) + 1
        child_decl = info.by_name.get(child.name)
        if child_decl is None:
            continue  # already reported as unexpected
        child_path = f"{path}/{child.name}[{ordinals[child.name]}]"
        _validate_element(compiled, child, child_decl, child_path, out, ids)


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GenConfig:
    """Generation knobs; the same config and document always yield the same
    corpus, and document i depends only on seed + i."""

    seed: int = 0
    count: int = 1
    max_repeat: int = 3
    text_alphabet: str = string.ascii_lowercase

    def __post_init__(self) -> None:
        if self.max_repeat < 1:
            raise ValueError("max_repeat must be >= 1")
        if self.count < 0:
            raise ValueError("count must be >= 0")


def generate(doc: XsdDocument, cfg: GenConfig) -> list[XmlElement]:
    """Deterministically generate ``cfg.count`` conforming documents rooted
    at the first global element."""
    compiled = _Compiled(doc)
    if not doc.elements:
        raise XsdError("E402", "document declares no global element")
    root = doc.elements[0]
    documents = []
    for index in range(cfg.count):
        rng = random.Random(cfg.seed + index)
        id_counter = _counter(1)
        documents.append(_gen_element(compiled, root, rng, cfg, id_counter, []))
    return documents


def _word(rng: random.Random, cfg: GenConfig) -> str:
    return "".join(rng.choice(cfg.text_alphabet) for _ in range(rng.randint(1, 12)))


def _pick_count(rng: random.Random, low: int, high: int | None, cfg: GenConfig) -> int:
    cap = max(low, cfg.max_repeat) if high is None else min(high, max(low, cfg.max_repeat))
    return rng.randint(low, cap)


def _gen_element(compiled, decl: XsdElement, rng, cfg: GenConfig, id_counter, stack) -> XmlElement:
    resolved = compiled.resolve(decl)
    if id(resolved) in stack:
        raise XsdError(
            "E402",
            f"recursive required reference to {resolved.name!r}: no finite instance",
        )
    info = compiled.info(resolved)
    if info.is_id:
        return XmlElement(info.name, (f"id{next(id_counter)}",))
    if info.is_leaf:
        return XmlElement(info.name, (_word(rng, cfg),))
    stack.append(id(resolved))
    children: list[XmlElement] = []
    if info.model is not None:
        children = _gen_group(compiled, info.model, rng, cfg, id_counter, stack)
    stack.pop()
    if info.mixed:
        content: list[XmlElement | str] = [_word(rng, cfg)]
        for child in children:
            content.append(child)
            content.append(_word(rng, cfg))
        return XmlElement(info.name, tuple(content))
    return XmlElement(info.name, tuple(children))


def _gen_group(compiled, group: _PGroup, rng, cfg, id_counter, stack) -> list[XmlElement]:
    out: list[XmlElement] = []
    repetitions = _pick_count(rng, group.min, group.max, cfg)
    for _ in range(repetitions):
        if group.kind == "sequence":
            for part in group.parts:
                out.extend(_gen_particle(compiled, part, rng, cfg, id_counter, stack, False))
        elif group.kind == "choice":
            options: list[_Particle | None] = [
                p for p in group.parts if not _on_stack(compiled, p, stack)
            ]
            if all(_nullable(p) for p in group.parts):
                options.append(None)
            if not options:
                raise XsdError(
                    "E402", "recursive required references: no finite instance"
                )
            picked = rng.choice(options)
            if picked is not None:
                out.extend(_gen_particle(compiled, picked, rng, cfg, id_counter, stack, True))
        else:  # all: children occur 0..1 each, in a shuffled order
            bucket: list[XmlElement] = []
            for part in group.parts:
                if part.min == 0 and _on_stack(compiled, part, stack):
                    continue
                if rng.randint(part.min, 1) == 1:
                    bucket.extend(
                        _gen_particle(compiled, part, rng, cfg, id_counter, stack, True)
                    )
            rng.shuffle(bucket)
            out.extend(bucket)
    return out


def _on_stack(compiled, part: _Particle, stack) -> bool:
    """Whether instantiating the particle would re-enter an element that is
    already being generated (a reference cycle)."""
    if isinstance(part, _PElem):
        return id(compiled.resolve(part.decl)) in stack
    return False


def _gen_particle(compiled, part: _Particle, rng, cfg, id_counter, stack, force_one: bool):
    if isinstance(part, _PElem):
        low = max(1, part.min) if force_one else part.min
        if low == 0 and id(compiled.resolve(part.decl)) in stack:
            return []  # break optional reference cycles
        times = _pick_count(rng, low, part.max, cfg)
        return [
            _gen_element(compiled, part.decl, rng, cfg, id_counter, stack)
            for _ in range(times)
        ]
    if force_one and part.min == 0:
        forced = _PGroup(part.kind, 1, part.max, part.parts)
        return _gen_group(compiled, forced, rng, cfg, id_counter, stack)
    return _gen_group(compiled, part, rng, cfg, id_counter, stack)


# ---------------------------------------------------------------------------
# random schema generation (property-test driver)


def random_schema_source(seed: int, budget: int = 6) -> str:
    """Deterministic DSL text for a validator-clean random schema.

    Covers all six participation values, both ordering flags, links,
    references, connectors with contexts, annotations, determinants, shared
    ESGs, and group repetition across seeds.
    """
    if budget < 1:
        raise ValueError("budget must allow at least one CSG")
    rng = random.Random(seed)
    esg_lines: list[str] = []
    annotation_lines: list[str] = []
    csg_lines: dict[str, list[str]] = {}
    tail_lines: list[str] = []
    csgs: list[tuple[str, int]] = []  # (name, layer)
    esgs: list[str] = []
    plain_usage: list[str] = []  # ESGs contained with a non-exclusive tuple
    linked_derived: set[str] = set()
    nest_parent: dict[str, str] = {}  # whose expansion a CSG's content joins
    counters = {"esg": 0, "csg": 0, "ann": 0, "conn": 0}

    def inside(candidate: str, host: str) -> bool:
        """Whether ``candidate`` expands within ``host``'s element content."""
        node: str | None = candidate
        while node is not None:
            if node == host:
                return True
            node = nest_parent.get(node)
        return False

    def fresh(kind: str) -> str:
        counters[kind] += 1
        return f"{kind}{counters[kind]}"

    def plain_tuple() -> str:
        p = rng.choice(["1:1", "0:1", "1:M", "0:M"])
        return f"<{p},{rng.randint(0, 1)}>"

    def new_esg() -> str:
        name = fresh("esg")
        esgs.append(name)
        esg_lines.append(f"  esg {name};")
        return name

    def new_csg(layer: int) -> str:
        name = fresh("csg")
        csgs.append((name, layer))
        group = f" group {plain_tuple()}" if rng.random() < 0.25 else ""
        header = f"  csg {name} @layer {layer}{group} {{"
        body: list[str] = []
        for _ in range(rng.randint(1, 3)):
            if esgs and rng.random() < 0.2:
                esg = rng.choice(esgs)  # shared usage
            else:
                esg = new_esg()
            det = "det " if rng.random() < 0.25 else ""
            tup = plain_tuple()
            body.append(f"    contains {det}{esg} {tup};")
            plain_usage.append(esg)
        if rng.random() < 0.2:
            ann = fresh("ann")
            annotation_lines.append(f"  annotation {ann};")
            body.append(f"    contains {ann} <1:1,{rng.randint(0, 1)}>;")
        if rng.random() < 0.25:
            run_p = rng.choice(["0:X", "1:X"])
            theta = rng.randint(0, 1)
            for _ in range(2):
                body.append(f"    contains {new_esg()} <{run_p},{theta}>;")
        if esgs and rng.random() < 0.15:
            body.append(f"    contains ref {rng.choice(esgs)} {plain_tuple()};")
        csg_lines[name] = [header, *body, "  }"]
        return name

    max_layer = rng.randint(1, min(4, budget))
    new_csg(max_layer)
    if budget > 3 and rng.random() < 0.3:
        new_csg(max_layer)

    def budget_left() -> int:
        return budget - len(csgs)

    stall = 0
    while budget_left() > 0 and stall < 20:
        before = len(csgs)
        upper = [(n, l) for n, l in csgs if l >= 2]
        mode = rng.random()
        if mode < 0.45 and upper:
            parent, parent_layer = rng.choice(upper)
            child = new_csg(parent_layer - 1)
            csg_lines[parent].insert(
                len(csg_lines[parent]) - 1, f"    contains {child} {plain_tuple()};"
            )
            nest_parent[child] = parent
        elif mode < 0.65 and upper:
            parent, parent_layer = rng.choice(upper)
            child = new_csg(parent_layer - 1)
            tail_lines.append(f"  associate {child} -- {parent} {plain_tuple()};")
            nest_parent[child] = parent
        elif mode < 0.8:
            existing, layer = rng.choice(csgs)
            sibling = new_csg(layer)
            tail_lines.append(f"  associate {sibling} -- {existing} {plain_tuple()};")
            nest_parent[sibling] = existing
        elif mode < 0.9 and budget_left() >= 2:
            host, host_layer = rng.choice(csgs)
            size = min(budget_left(), rng.randint(2, 3))
            members = [new_csg(rng.randint(1, host_layer)) for _ in range(size)]
            conn = fresh("conn")
            lines = [f"  connector {conn} {{", f"    member {host} {plain_tuple()};"]
            inner_host = host
            if rng.random() < 0.7 and budget_left() > 0:
                context = new_csg(max(1, host_layer - 1) if host_layer > 1 else 1)
                lines.append(f"    context {context} {plain_tuple()};")
                nest_parent[context] = host
                inner_host = context
            for member in members:
                nest_parent[member] = inner_host
            if len(members) >= 2 and rng.random() < 0.5:
                run_p = rng.choice(["0:X", "1:X"])
                theta = rng.randint(0, 1)
                head, excl = members[:-2], members[-2:]
                for m in head:
                    lines.append(f"    member {m} {plain_tuple()};")
                for m in excl:
                    lines.append(f"    member {m} <{run_p},{theta}>;")
            else:
                for m in members:
                    lines.append(f"    member {m} {plain_tuple()};")
            lines.append("  }")
            tail_lines.extend(lines)
        else:
            candidates = [
                (n, l) for n, l in csgs if l >= 2 and n not in linked_derived
            ]
            if candidates:
                derived, derived_layer = rng.choice(candidates)
                base = new_csg(derived_layer - 1)
                tail_lines.append(f"  link {base} -> {derived};")
                linked_derived.add(derived)
                nest_parent[base] = derived  # base content expands inside derived
        stall = 0 if len(csgs) > before else stall + 1

    if len(csgs) >= 2 and rng.random() < 0.3:
        names = [n for n, _ in csgs]
        pairs = [
            (a, b)
            for a in names
            for b in names
            if a != b and not inside(a, b)
        ]
        if pairs:
            a, b = pairs[rng.randrange(len(pairs))]
            tail_lines.append(f"  ref {a} -> {b};")
    if len(set(plain_usage)) >= 1 and len(esgs) >= 2 and rng.random() < 0.3:
        source = rng.choice(sorted(set(plain_usage)))
        target = rng.choice([e for e in esgs if e != source] or [source])
        if target != source:
            tail_lines.append(f"  ref {source} -> {target};")

    lines = [f"schema Rnd{seed} {{"]
    lines.extend(esg_lines)
    lines.extend(annotation_lines)
    for name, _ in csgs:
        lines.extend(csg_lines[name])
    lines.extend(tail_lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


def random_schema(seed: int, budget: int = 6) -> SchemaGraph:
    """A validator-clean random schema graph (see random_schema_source)."""
    return compile_source(random_schema_source(seed, budget), f"<random:{seed}>")
