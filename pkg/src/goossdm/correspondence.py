"""Structural-correspondence check between a schema graph and emitted XSD.

Every source construct has a mandated correspondent in the target document
(element, ID type, complex type, occurrence bounds, compositor kind, choice,
nesting, extension, reference). The checker recomputes the expected facts
from the schema alone and verifies them against a document value read back
from text, so it never trusts the transformer's in-memory output. Nesting
facts for associations and connectors are checked as subtree containment:
the exact depth varies with choice grouping, the presence does not.

``mutation_suite`` hardens the checker: each defined document mutation must
flip its matching row to fail.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import TransformError
from .model import CSG, SchemaGraph, association_host, connector_host
from .transform import (
    ID_TYPE,
    LayoutEntry,
    degraded_occurs,
    expected_compositor,
    fold_entry_runs,
    layout_entries,
    schema_roots,
)
from .xsd import (
    Occurs,
    XsdChoice,
    XsdComplexType,
    XsdDocument,
    XsdElement,
    XsdExtension,
    XsdGroup,
    emit,
    read,
)


@dataclass(frozen=True)
class CorrespondenceRow:
    kind: str
    construct: str
    expected: str
    found: str | None
    note: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.found is not None else "fail"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "construct": self.construct,
            "expected": self.expected,
            "found": self.found,
            "status": self.status,
            "note": self.note,
        }


@dataclass(frozen=True)
class CorrespondenceReport:
    rows: tuple[CorrespondenceRow, ...]

    @property
    def ok(self) -> bool:
        return all(row.status == "pass" for row in self.rows)

    def failures(self) -> tuple[CorrespondenceRow, ...]:
        return tuple(row for row in self.rows if row.status == "fail")

    def to_json(self) -> dict:
        return {"ok": self.ok, "rows": [row.to_json() for row in self.rows]}

    def to_table(self) -> str:
        lines = [f"{'status':6}  {'kind':16}  construct -> expected"]
        for row in self.rows:
            mark = "pass" if row.status == "pass" else "FAIL"
            note = f"  [{row.note}]" if row.note else ""
            lines.append(f"{mark:6}  {row.kind:16}  {row.construct} -> {row.expected}{note}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# document index


class _DocIndex:
    def __init__(self, doc: XsdDocument):
        self.doc = doc
        self.globals = {el.name: el for el in doc.elements if el.name}
        self.types = {ct.name: ct for ct in doc.types if ct.name}

    def resolved_type(self, el: XsdElement) -> XsdComplexType | None:
        if el.content is not None:
            return el.content
        if el.type_name is not None and el.type_name != ID_TYPE:
            return self.types.get(el.type_name)
        return None

    def all_elements(self) -> list[tuple[str, XsdElement]]:
        out: list[tuple[str, XsdElement]] = []

        def walk_particle(node, path: str) -> None:
            if isinstance(node, XsdElement):
                here = f"{path}/{node.name or 'ref:' + (node.ref or '?')}"
                out.append((here, node))
                if node.content is not None:
                    walk_content(node.content.content, here)
            else:
                for child in node.children:
                    walk_particle(child, path)

        def walk_content(content, path: str) -> None:
            if content is None:
                return
            if isinstance(content, XsdExtension):
                walk_content(content.content, path)
            else:
                walk_particle(content, path)

        for el in self.doc.elements:
            walk_particle(el, "")
        for ct in self.doc.types:
            walk_content(ct.content, f"/type:{ct.name}")
        return out

    def sites_of(self, name: str) -> list[tuple[str, XsdComplexType]]:
        """Complex types attributable to one construct: its named type plus
        the resolved type of every element bearing its name."""
        sites: list[tuple[str, XsdComplexType]] = []
        named = self.types.get(name)
        if named is not None:
            sites.append((f"/type:{name}", named))
        for path, el in self.all_elements():
            if el.name == name:
                resolved = self.resolved_type(el)
                if resolved is not None and resolved is not named:
                    sites.append((path, resolved))
        return sites

    def scope(self, ct: XsdComplexType, seen: frozenset = frozenset()) -> list[XsdElement]:
        """Element particles of a content model, without descending into the
        nested elements' own types; extension bases are resolved in."""
        out: list[XsdElement] = []
        content = ct.content
        if isinstance(content, XsdExtension):
            if content.base not in seen:
                base = self.types.get(content.base)
                if base is not None:
                    out.extend(self.scope(base, seen | {content.base}))
            if content.content is not None:
                out.extend(_element_particles(content.content))
        elif content is not None:
            out.extend(_element_particles(content))
        return out

    def scope_choices(self, ct: XsdComplexType, seen: frozenset = frozenset()) -> list[XsdChoice]:
        out: list[XsdChoice] = []
        content = ct.content
        if isinstance(content, XsdExtension):
            if content.base not in seen:
                base = self.types.get(content.base)
                if base is not None:
                    out.extend(self.scope_choices(base, seen | {content.base}))
            if content.content is not None:
                out.extend(_choice_particles(content.content))
        elif content is not None:
            out.extend(_choice_particles(content))
        return out

    def compositor_of(self, ct: XsdComplexType) -> XsdGroup | XsdChoice | None:
        content = ct.content
        if isinstance(content, XsdExtension):
            return content.content
        return content

    def names_under(self, ct: XsdComplexType) -> set[str]:
        """Every element name reachable inside a complex type, descending
        into nested types and following refs and type names (cycle-safe)."""
        names: set[str] = set()
        seen_types: set[str] = set()
        seen_refs: set[str] = set()

        def visit_content(content) -> None:
            if content is None:
                return
            if isinstance(content, XsdExtension):
                if content.base not in seen_types:
                    seen_types.add(content.base)
                    base = self.types.get(content.base)
                    if base is not None:
                        visit_content(base.content)
                visit_content(content.content)
            else:
                for child in content.children:
                    if isinstance(child, XsdElement):
                        visit_element(child)
                    else:
                        visit_content(child)

        def visit_element(el: XsdElement) -> None:
            if el.ref is not None:
                names.add(el.ref)
                if el.ref not in seen_refs:
                    seen_refs.add(el.ref)
                    target = self.globals.get(el.ref)
                    if target is not None:
                        visit_element(target)
                return
            if el.name:
                names.add(el.name)
            resolved = self.resolved_type(el)
            if resolved is not None:
                if resolved.name:
                    if resolved.name in seen_types:
                        return
                    seen_types.add(resolved.name)
                visit_content(resolved.content)

        visit_content(ct.content)
        return names


def _element_particles(group) -> list[XsdElement]:
    out: list[XsdElement] = []

    def walk(node) -> None:
        if isinstance(node, XsdElement):
            out.append(node)
        else:
            for child in node.children:
                walk(child)

    walk(group)
    return out


def _choice_particles(group) -> list[XsdChoice]:
    out: list[XsdChoice] = []

    def walk(node) -> None:
        if isinstance(node, XsdChoice):
            out.append(node)
        if not isinstance(node, XsdElement):
            for child in node.children:
                walk(child)

    walk(group)
    return out


def _matches_slot(el: XsdElement, name: str) -> bool:
    return el.name == name or el.ref == name


# ---------------------------------------------------------------------------
# the check


def reachable_csgs(schema: SchemaGraph) -> set[str]:
    """CSGs that appear in some root tree, as a named base type, or as a
    reference target; everything the document is expected to mention."""
    try:
        roots = schema_roots(schema)
    except TransformError:
        roots = tuple(c.name for c in schema.roots())
    seen = set(roots)
    queue = list(roots)
    while queue:
        name = queue.pop(0)
        targets: list[str] = []
        for entry in layout_entries(schema, name):
            if entry.kind in ("csg", "context", "connector-member", "assoc-partner", "csg-ref"):
                targets.append(entry.name)
            elif entry.kind == "contained-ref" and schema.kind_of(entry.name) == CSG:
                targets.append(entry.name)
        for link in schema.links:
            if link.derived == name:
                targets.append(link.base)
                break
        for target in targets:
            if target not in seen:
                seen.add(target)
                queue.append(target)
    return seen


def check_correspondence(schema: SchemaGraph, doc: XsdDocument) -> CorrespondenceReport:
    """One row per source construct; a row passes when its correspondent is
    found in the document."""
    index = _DocIndex(doc)
    reachable = sorted(reachable_csgs(schema), key=_declaration_order(schema))
    rows: list[CorrespondenceRow] = []

    for csg_name in reachable:
        sites = index.sites_of(csg_name)
        rows.append(
            CorrespondenceRow(
                kind="csg",
                construct=f"CSG {csg_name}",
                expected="complex type",
                found=sites[0][0] if sites else None,
            )
        )
        expectation = expected_compositor(schema, csg_name)
        if expectation is not None:
            comp_kind, forced, group_occurs = expectation
            found = None
            for path, ct in sites:
                comp = index.compositor_of(ct)
                if (
                    isinstance(comp, XsdGroup)
                    and comp.kind == comp_kind
                    and comp.occurs == group_occurs
                ):
                    found = path
                    break
            rows.append(
                CorrespondenceRow(
                    kind="compositor",
                    construct=f"ordering of CSG {csg_name}",
                    expected=f"{comp_kind} compositor, occurs {group_occurs.min}..{group_occurs.max_text}",
                    found=found,
                    note="unordered set forced to sequence (W201)" if forced else "",
                )
            )
        rows.extend(_member_rows(schema, index, csg_name, sites))

    rows.extend(_association_rows(schema, index, reachable))
    rows.extend(_connector_rows(schema, index, reachable))
    rows.extend(_link_rows(schema, index, reachable))
    rows.extend(_reference_rows(schema, index, reachable))
    return CorrespondenceReport(tuple(rows))


def _declaration_order(schema: SchemaGraph):
    order = {c.name: i for i, c in enumerate(schema.csgs)}
    return lambda name: order.get(name, len(order))


def _find_in_scope(sites, name: str, occurs: Occurs | None = None):
    for path, ct_scope in sites:
        for el in ct_scope:
            if _matches_slot(el, name) and (occurs is None or el.occurs == occurs):
                return f"{path}/{name}"
    return None


def _member_rows(schema, index: _DocIndex, csg_name: str, sites) -> list[CorrespondenceRow]:
    rows: list[CorrespondenceRow] = []
    scoped = [(path, index.scope(ct)) for path, ct in sites]
    entries = layout_entries(schema, csg_name)

    for entry in entries:
        if entry.kind == "annotation" and entry.constraint.theta == 0:
            found = next((path for path, ct in sites if ct.mixed), None)
            rows.append(
                CorrespondenceRow(
                    kind="annotation-mixed",
                    construct=f"annotation {entry.name} in {csg_name}",
                    expected='mixed="true" on the parent complex type',
                    found=found,
                )
            )

    for item in fold_entry_runs(entries):
        if isinstance(item, list):
            rows.append(_choice_row(index, csg_name, sites, item))
            for entry in item:
                if entry.kind == "esg":
                    rows.extend(_esg_rows(csg_name, scoped, entry))
            continue
        entry = item
        if entry.kind == "esg":
            rows.extend(_esg_rows(csg_name, scoped, entry))
            rows.append(_occurs_row(csg_name, scoped, entry))
        elif entry.kind == "annotation":  # theta == 1; unordered handled above
            found = _find_in_scope(scoped, entry.name)
            rows.append(
                CorrespondenceRow(
                    kind="annotation-element",
                    construct=f"annotation {entry.name} in {csg_name}",
                    expected="ordered text element",
                    found=found,
                )
            )
        elif entry.kind in ("csg", "context", "connector-member", "assoc-partner", "contained-ref"):
            rows.append(_occurs_row(csg_name, scoped, entry))
    return rows


def _esg_rows(csg_name: str, scoped, entry: LayoutEntry) -> list[CorrespondenceRow]:
    rows = [
        CorrespondenceRow(
            kind="esg-usage",
            construct=f"ESG {entry.name} in {csg_name}",
            expected=f"element named {entry.name}",
            found=_find_in_scope(scoped, entry.name),
        )
    ]
    if entry.determinant:
        found = None
        for path, ct_scope in scoped:
            for el in ct_scope:
                if el.name == entry.name and el.type_name == ID_TYPE:
                    found = f"{path}/{entry.name}"
                    break
            if found:
                break
        rows.append(
            CorrespondenceRow(
                kind="determinant",
                construct=f"determinant ESG {entry.name} in {csg_name}",
                expected=f'type="{ID_TYPE}"',
                found=found,
            )
        )
    return rows


def _occurs_row(csg_name: str, scoped, entry: LayoutEntry) -> CorrespondenceRow:
    occurs = degraded_occurs(entry.constraint)
    label = {
        "esg": "ESG",
        "csg": "contained CSG",
        "context": "connector context",
        "connector-member": "connector member",
        "assoc-partner": "association partner",
        "contained-ref": "contained reference",
    }[entry.kind]
    return CorrespondenceRow(
        kind="occurs",
        construct=f"{label} {entry.name} in {csg_name}",
        expected=f"occurs {occurs.min}..{occurs.max_text}",
        found=_find_in_scope(scoped, entry.name, occurs),
    )


def _choice_row(index: _DocIndex, csg_name: str, sites, run: list[LayoutEntry]) -> CorrespondenceRow:
    names = [entry.name for entry in run]
    wanted = {entry.name: degraded_occurs(entry.constraint) for entry in run}
    found = None
    for path, ct in sites:
        for choice in index.scope_choices(ct):
            branch_els = _element_particles(choice)
            ok = True
            for name, occurs in wanted.items():
                if not any(
                    _matches_slot(el, name) and el.occurs == occurs for el in branch_els
                ):
                    ok = False
                    break
            if ok:
                found = f"{path}/choice({', '.join(names)})"
                break
        if found:
            break
    value = run[0].constraint.p.value
    return CorrespondenceRow(
        kind="choice",
        construct=f"exclusive run ({', '.join(names)}) in {csg_name}",
        expected=f"xs:choice over {', '.join(names)} with {value} branch bounds",
        found=found,
    )


def _association_rows(schema, index: _DocIndex, reachable) -> list[CorrespondenceRow]:
    rows = []
    for assoc in schema.associations:
        host, partner = association_host(schema, assoc)
        if host not in reachable or partner == host:
            continue
        found = None
        for path, ct in index.sites_of(host):
            if partner in index.names_under(ct):
                found = f"{path}//{partner}"
                break
        rows.append(
            CorrespondenceRow(
                kind="association",
                construct=f"association {assoc.left} -- {assoc.right}",
                expected=f"{partner} nested inside {host}",
                found=found,
            )
        )
    return rows


def _connector_rows(schema, index: _DocIndex, reachable) -> list[CorrespondenceRow]:
    rows = []
    for connector in schema.connectors:
        if not connector.members:
            continue
        host = connector_host(schema, connector).csg
        if host not in reachable:
            continue
        members = [m for m in connector.members if m.csg != host]
        inner_host = host
        if connector.context is not None:
            context = connector.context.csg
            found = None
            for path, ct in index.sites_of(host):
                if context in index.names_under(ct):
                    found = f"{path}//{context}"
                    break
            rows.append(
                CorrespondenceRow(
                    kind="csg-association",
                    construct=f"connector {connector.name} context {context}",
                    expected=f"context {context} nested inside {host}",
                    found=found,
                )
            )
            inner_host = context
        for member in members:
            found = None
            for path, ct in index.sites_of(inner_host):
                if member.csg in index.names_under(ct):
                    found = f"{path}//{member.csg}"
                    break
            rows.append(
                CorrespondenceRow(
                    kind="csg-association",
                    construct=f"connector {connector.name} member {member.csg}",
                    expected=f"{member.csg} nested inside {inner_host}",
                    found=found,
                )
            )
    return rows


def _link_rows(schema, index: _DocIndex, reachable) -> list[CorrespondenceRow]:
    rows = []
    for link in schema.links:
        if link.derived not in reachable:
            continue
        found = None
        if link.base in index.types:
            for path, ct in index.sites_of(link.derived):
                content = ct.content
                if isinstance(content, XsdExtension) and content.base == link.base:
                    found = f"{path}/extension({link.base})"
                    break
        rows.append(
            CorrespondenceRow(
                kind="link",
                construct=f"link {link.base} -> {link.derived}",
                expected=f"named type {link.base} and xs:extension base={link.base}",
                found=found,
            )
        )
    return rows


def _reference_rows(schema, index: _DocIndex, reachable) -> list[CorrespondenceRow]:
    rows = []
    all_els = index.all_elements()

    def global_exists(name: str) -> bool:
        return name in index.globals

    for ref in schema.references:
        kind = schema.kind_of(ref.source)
        found = None
        if global_exists(ref.target):
            if kind == CSG:
                if ref.source in reachable:
                    for path, ct in index.sites_of(ref.source):
                        if any(el.ref == ref.target for el in index.scope(ct)):
                            found = f"{path}/ref:{ref.target}"
                            break
                else:
                    continue
            else:
                for path, el in all_els:
                    if el.ref == ref.target:
                        found = path
                        break
        rows.append(
            CorrespondenceRow(
                kind="reference",
                construct=f"reference {ref.source} -> {ref.target}",
                expected=f"global element {ref.target} and a ref site",
                found=found,
            )
        )

    for csg in schema.csgs:
        if csg.name not in reachable:
            continue
        for entry in layout_entries(schema, csg.name):
            if entry.kind != "contained-ref":
                continue
            found = None
            if global_exists(entry.name):
                for path, ct in index.sites_of(csg.name):
                    if any(el.ref == entry.name for el in index.scope(ct)):
                        found = f"{path}/ref:{entry.name}"
                        break
            rows.append(
                CorrespondenceRow(
                    kind="reference",
                    construct=f"contained reference to {entry.name} in {csg.name}",
                    expected=f"global element {entry.name} and a ref site",
                    found=found,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# mutation suite


@dataclass(frozen=True)
class MutationOutcome:
    name: str
    expected_kind: str
    applicable: bool
    detected: bool
    failed_kinds: tuple[str, ...] = ()


def _rewrite_first(doc: XsdDocument, want, action) -> XsdDocument | None:
    """Rebuild the document with ``action`` applied to the first node for
    which ``want(node, ctx)`` holds; ctx is 'global', 'list' or 'content'.
    Returns None when nothing matched. Pre-order, document order."""
    state = {"done": False}

    def apply_here(node, ctx):
        if not state["done"] and want(node, ctx):
            state["done"] = True
            return True
        return False

    def rebuild_list(nodes, ctx):
        out = []
        for node in nodes:
            if apply_here(node, ctx):
                result = action(node)
                if result is None:
                    continue
                if isinstance(result, tuple):
                    out.extend(result)
                else:
                    out.append(result)
                continue
            out.append(rebuild(node))
        return tuple(out)

    def rebuild_content(node):
        if node is None:
            return None
        if apply_here(node, "content"):
            return action(node)
        return rebuild(node)

    def rebuild(node):
        if state["done"]:
            return node
        if isinstance(node, XsdElement):
            if node.content is None:
                return node
            new_ct = rebuild_content(node.content)
            return node if new_ct is node.content else replace(node, content=new_ct)
        if isinstance(node, XsdComplexType):
            new_content = rebuild_content(node.content)
            return node if new_content is node.content else replace(node, content=new_content)
        if isinstance(node, XsdExtension):
            new_content = rebuild_content(node.content)
            return node if new_content is node.content else replace(node, content=new_content)
        if isinstance(node, (XsdGroup, XsdChoice)):
            new_children = rebuild_list(node.children, "list")
            return node if new_children == node.children else replace(node, children=new_children)
        return node

    new_elements = rebuild_list(doc.elements, "global")
    new_types = tuple(rebuild(ct) for ct in doc.types)
    if not state["done"]:
        return None
    return XsdDocument(new_elements, new_types)


def _is_leaf_element(node, ctx) -> bool:
    return (
        isinstance(node, XsdElement)
        and node.content is None
        and node.type_name is None
        and node.ref is None
        and ctx == "list"
    )


_MUTATIONS: list[tuple[str, str, object]] = [
    (
        "delete-element",
        "esg-usage",
        lambda doc: _rewrite_first(doc, _is_leaf_element, lambda node: None),
    ),
    (
        "delete-complextype",
        "csg",
        lambda doc: _rewrite_first(
            doc,
            lambda node, ctx: isinstance(node, XsdElement)
            and node.content is not None
            and ctx == "list",
            lambda node: replace(node, content=None),
        ),
    ),
    (
        "strip-id-type",
        "determinant",
        lambda doc: _rewrite_first(
            doc,
            lambda node, ctx: isinstance(node, XsdElement) and node.type_name == ID_TYPE,
            lambda node: replace(node, type_name=None),
        ),
    ),
    (
        "swap-compositor",
        "compositor",
        lambda doc: _rewrite_first(
            doc,
            lambda node, ctx: isinstance(node, XsdGroup)
            and all(c.occurs.max == 1 for c in node.children),
            lambda node: replace(node, kind="all" if node.kind == "sequence" else "sequence"),
        ),
    ),
    (
        "drop-choice",
        "choice",
        lambda doc: _rewrite_first(
            doc,
            lambda node, ctx: isinstance(node, XsdChoice) and ctx == "list",
            lambda node: node.children,
        ),
    ),
    (
        "strip-occurs",
        "occurs",
        lambda doc: _rewrite_first(
            doc,
            lambda node, ctx: isinstance(node, XsdElement) and not node.occurs.is_default,
            lambda node: replace(node, occurs=Occurs(1, 1)),
        ),
    ),
    (
        "drop-extension",
        "link",
        lambda doc: _rewrite_first(
            doc,
            lambda node, ctx: isinstance(node, XsdExtension),
            lambda node: node.content,
        ),
    ),
    (
        "drop-ref",
        "reference",
        lambda doc: _rewrite_first(
            doc,
            lambda node, ctx: isinstance(node, XsdElement) and node.ref is not None,
            lambda node: None,
        ),
    ),
]


def mutation_suite(schema: SchemaGraph, doc: XsdDocument) -> list[MutationOutcome]:
    """Apply each defined document mutation and verify the checker flags the
    matching row; ends with an identity control that must stay all-pass."""
    outcomes: list[MutationOutcome] = []
    for name, expected_kind, mutate in _MUTATIONS:
        mutated = mutate(doc)
        if mutated is None:
            outcomes.append(MutationOutcome(name, expected_kind, False, False))
            continue
        report = check_correspondence(schema, read(emit(mutated)))
        failed = tuple(sorted({row.kind for row in report.failures()}))
        outcomes.append(
            MutationOutcome(name, expected_kind, True, expected_kind in failed, failed)
        )
    report = check_correspondence(schema, read(emit(doc)))
    failed = tuple(sorted({row.kind for row in report.failures()}))
    outcomes.append(MutationOutcome("identity", "", True, bool(failed), failed))
    return outcomes
