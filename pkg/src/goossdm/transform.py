"""Compiles a validated schema graph into the XSD subset.

The mapping, construct by construct:

* ESG usage            -> an element named after the ESG at each usage site;
                          determinant usages carry ``type="xs:ID"``.
* CSG                  -> a complex type: inline at its usage sites, named
                          and global when it serves as a link base.
* containment tuple    -> minOccurs/maxOccurs on the member element
                          (1:1 -> 1..1, 0:1 -> 0..1, 1:M -> 1..unbounded,
                          0:M -> 0..unbounded); the ordering flag picks the
                          compositor (1 -> sequence, 0 -> all).
* exclusive members    -> a consecutive run of 0:X/1:X members folds into an
                          xs:choice; 0:X branches carry minOccurs="0"; a run
                          of one degrades to 0:1/1:1.
* group repetition     -> a CSG's group tuple maps onto the compositor's
                          occurrence bounds.
* annotation           -> mixed="true" on the parent type (unordered) or an
                          ordered text element (ordered).
* binary association   -> the partner nests inside the hosting CSG (upper
                          layer across layers, second-declared within one).
* connector            -> the hosting member (highest layer) receives the
                          context CSG; the remaining members nest inside the
                          context in declaration order, folding exclusives.
* link                 -> the base CSG becomes a named global complex type;
                          the derived CSG extends it via complexContent.
* reference            -> the target becomes a global element; the source
                          site emits ``<xs:element ref="..."/>``.

Topmost-layer CSGs become the global root elements; a topmost CSG that nests
inside another root through an association or connector is absorbed into
that root instead of becoming global itself. Each CSG is planned at most
once per root tree; a revisited CSG is promoted to a global element and the
site emits a reference to it.

``layout_entries`` is the single source of truth for which members appear at
a CSG and in which order; the planner materializes it and the correspondence
checker recomputes expectations from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .diagnostics import Diagnostic, SourceSpan
from .errors import TransformError
from .model import (
    ANNOTATION,
    CSG,
    ESG,
    ConstraintTuple,
    Participation,
    SchemaGraph,
    association_host,
    connector_host,
)
from .validator import validate
from .xsd import (
    Occurs,
    XsdChoice,
    XsdComplexType,
    XsdDocument,
    XsdElement,
    XsdExtension,
    XsdGroup,
)

ID_TYPE = "xs:ID"


@dataclass(frozen=True)
class ChoiceMarker:
    """Participation is exclusive; occurrence is decided by the choice."""

    mandatory: bool  # True for 1:X, False for 0:X


_OCCURS_TABLE = {
    Participation.ONE: Occurs(1, 1),
    Participation.OPTIONAL: Occurs(0, 1),
    Participation.MANY: Occurs(1, None),
    Participation.OPTIONAL_MANY: Occurs(0, None),
}


def map_participation(constraint: ConstraintTuple) -> Occurs | ChoiceMarker:
    """Occurrence bounds of a participation value; exclusive values return a
    marker that the choice builder resolves."""
    if constraint.p is Participation.OPTIONAL_EXCLUSIVE:
        return ChoiceMarker(mandatory=False)
    if constraint.p is Participation.EXCLUSIVE:
        return ChoiceMarker(mandatory=True)
    return _OCCURS_TABLE[constraint.p]


def degraded_occurs(constraint: ConstraintTuple) -> Occurs:
    """Occurrence bounds with lone exclusives degraded: a single 0:X member
    acts like 0:1 and a single 1:X member like 1:1."""
    mapped = map_participation(constraint)
    if isinstance(mapped, ChoiceMarker):
        return Occurs(1, 1) if mapped.mandatory else Occurs(0, 1)
    return mapped


def choose_compositor(
    theta: int,
    member_occurs: list[Occurs],
    group_occurs: Occurs | None = None,
) -> tuple[str, bool]:
    """Compositor kind for a member set: (kind, forced_to_sequence).

    Ordered member sets use a sequence. Unordered sets use the any-order
    compositor unless a member (or the whole group) repeats, which the
    any-order compositor cannot express; those fall back to a sequence and
    the caller records W201.
    """
    if theta == 1:
        return "sequence", False
    repeating = any(o.max is None or o.max > 1 for o in member_occurs)
    if group_occurs is not None and (group_occurs.max is None or group_occurs.max > 1):
        repeating = True
    if repeating:
        return "sequence", True
    return "all", False


# ---------------------------------------------------------------------------
# member layout: the shared declaration-order view of one CSG's content


@dataclass(frozen=True)
class LayoutEntry:
    """One slot in a CSG's content, before exclusive runs are folded.

    kinds: esg, annotation, csg (contained), contained-ref, context,
    connector-member, assoc-partner, esg-ref, csg-ref. Bare reference slots
    (esg-ref/csg-ref) carry no constraint and never join an exclusive run.
    ``segment`` scopes disjunction groups: an exclusive run never spans two
    relationship sets (containment vs. one connector vs. associations).
    """

    kind: str
    name: str
    constraint: ConstraintTuple | None = None
    determinant: bool = False
    connector: str | None = None
    segment: str = "members"


def layout_entries(schema: SchemaGraph, csg_name: str) -> list[LayoutEntry]:
    """Every member slot of one CSG in emission order: contained members,
    then connector content (hosted context, or members when this CSG is the
    context or the connector has none), then hosted association partners,
    then outgoing references."""
    entries: list[LayoutEntry] = []
    for edge in schema.members_of(csg_name):
        kind = schema.kind_of(edge.child)
        if edge.is_reference:
            entries.append(LayoutEntry("contained-ref", edge.child, edge.constraint))
            continue
        if kind == ESG:
            entries.append(
                LayoutEntry("esg", edge.child, edge.constraint, edge.is_determinant)
            )
            if not edge.constraint.p.is_exclusive:
                for ref in schema.references:
                    if ref.source == edge.child and schema.kind_of(ref.target) == ESG:
                        entries.append(LayoutEntry("esg-ref", ref.target))
        elif kind == ANNOTATION:
            entries.append(LayoutEntry("annotation", edge.child, edge.constraint))
        else:
            entries.append(LayoutEntry("csg", edge.child, edge.constraint))

    for connector in schema.connectors:
        if not connector.members:
            continue
        host = connector_host(schema, connector).csg
        members = tuple(m for m in connector.members if m.csg != host)
        segment = f"connector:{connector.name}"
        if host == csg_name:
            if connector.context is not None:
                entries.append(
                    LayoutEntry(
                        "context",
                        connector.context.csg,
                        connector.context.constraint,
                        connector=connector.name,
                        segment=segment,
                    )
                )
            else:
                entries.extend(
                    LayoutEntry(
                        "connector-member",
                        m.csg,
                        m.constraint,
                        connector=connector.name,
                        segment=segment,
                    )
                    for m in members
                )
        elif connector.context is not None and connector.context.csg == csg_name:
            entries.extend(
                LayoutEntry(
                    "connector-member",
                    m.csg,
                    m.constraint,
                    connector=connector.name,
                    segment=segment,
                )
                for m in members
            )

    for assoc in schema.associations:
        host, partner = association_host(schema, assoc)
        if host == csg_name and partner != csg_name:
            entries.append(
                LayoutEntry("assoc-partner", partner, assoc.constraint, segment="assoc")
            )

    for ref in schema.references:
        if ref.source == csg_name and schema.kind_of(ref.target) == CSG:
            entries.append(LayoutEntry("csg-ref", ref.target, segment="refs"))
    return entries


def _is_member_slot(entry: LayoutEntry) -> bool:
    """Whether the entry contributes a particle (unordered annotations only
    flip the mixed flag)."""
    return not (entry.kind == "annotation" and entry.constraint.theta == 0)


def fold_entry_runs(entries: list[LayoutEntry]) -> list[list[LayoutEntry] | LayoutEntry]:
    """Group consecutive exclusive member slots into runs; everything else
    passes through. Runs of one degrade back to single entries, and a run
    never crosses a segment boundary."""
    out: list[list[LayoutEntry] | LayoutEntry] = []
    run: list[LayoutEntry] = []

    def close() -> None:
        if len(run) >= 2:
            out.append(list(run))
        elif run:
            out.append(run[0])
        run.clear()

    for entry in entries:
        if not _is_member_slot(entry):
            continue
        if entry.constraint is not None and entry.constraint.p.is_exclusive:
            if run and run[-1].segment != entry.segment:
                close()
            run.append(entry)
            continue
        close()
        out.append(entry)
    close()
    return out


def effective_theta(schema: SchemaGraph, csg_name: str) -> int:
    """A CSG's compositor is ordered when any constraint attached to its
    content (member, group, association, connector slot) is ordered."""
    thetas = [
        e.constraint.theta for e in layout_entries(schema, csg_name) if e.constraint is not None
    ]
    group = schema.csg(csg_name).group_occurs
    if group is not None:
        thetas.append(group.theta)
    return max(thetas, default=0)


def expected_compositor(schema: SchemaGraph, csg_name: str) -> tuple[str, bool, Occurs] | None:
    """(kind, forced, group occurs) a correct document must show for this
    CSG, recomputed from the schema alone; None when it has no particles."""
    folded = fold_entry_runs(layout_entries(schema, csg_name))
    if not folded:
        return None
    member_occurs = [
        Occurs(1, 1)
        if isinstance(item, list) or item.constraint is None
        else degraded_occurs(item.constraint)
        for item in folded
    ]
    group = schema.csg(csg_name).group_occurs
    group_occurs = degraded_occurs(group) if group is not None else Occurs(1, 1)
    kind, forced = choose_compositor(
        effective_theta(schema, csg_name), member_occurs, group_occurs
    )
    return kind, forced, group_occurs


def schema_roots(schema: SchemaGraph) -> tuple[str, ...]:
    """Global roots: topmost CSGs minus those absorbed into another root by
    an association or connector. Raises E503 when absorption leaves none."""
    topmost = schema.roots()
    top_names = {c.name for c in topmost}
    absorbed: set[str] = set()
    for assoc in schema.associations:
        host, partner = association_host(schema, assoc)
        if partner in top_names and partner != host:
            absorbed.add(partner)
    for connector in schema.connectors:
        if not connector.members:
            continue
        host = connector_host(schema, connector).csg
        for member in connector.members:
            if member.csg in top_names and member.csg != host:
                absorbed.add(member.csg)
    roots = tuple(c.name for c in topmost if c.name not in absorbed)
    if not roots:
        names = " -- ".join(sorted(top_names))
        raise TransformError(
            "E503",
            f"associations among topmost CSGs ({names}) leave no root for a "
            f"tree-shaped document",
        )
    return roots


# ---------------------------------------------------------------------------
# nesting plan


@dataclass(frozen=True)
class PlanElement:
    """A leaf element usage: ESG or ordered annotation."""

    name: str
    occurs: Occurs = Occurs()
    xsd_type: str | None = None

    def to_json(self) -> dict:
        return {
            "kind": "element",
            "name": self.name,
            "occurs": self.occurs.to_json(),
            "type": self.xsd_type,
        }


@dataclass(frozen=True)
class PlanRef:
    """A reference to a promoted global element."""

    target: str
    occurs: Occurs = Occurs()

    def to_json(self) -> dict:
        return {"kind": "ref", "target": self.target, "occurs": self.occurs.to_json()}


@dataclass(frozen=True)
class PlanChoice:
    """A disjunction group over exclusive members."""

    branches: tuple["PlanMember", ...]

    def to_json(self) -> dict:
        return {"kind": "choice", "branches": [b.to_json() for b in self.branches]}


@dataclass(frozen=True)
class PlanCsg:
    """One CSG occurrence: its compositor decision and ordered members."""

    name: str
    occurs: Occurs = Occurs()
    compositor: str | None = None
    compositor_occurs: Occurs = Occurs()
    mixed: bool = False
    extension_base: str | None = None
    members: tuple["PlanMember", ...] = ()

    def to_json(self) -> dict:
        return {
            "kind": "csg",
            "name": self.name,
            "occurs": self.occurs.to_json(),
            "compositor": self.compositor,
            "compositor_occurs": self.compositor_occurs.to_json(),
            "mixed": self.mixed,
            "extension_base": self.extension_base,
            "members": [m.to_json() for m in self.members],
        }


PlanMember = PlanElement | PlanRef | PlanCsg | PlanChoice


@dataclass(frozen=True)
class NestingPlan:
    roots: tuple[PlanCsg, ...]
    promoted: tuple[PlanCsg | PlanElement, ...] = ()
    named_types: tuple[PlanCsg, ...] = ()
    warnings: tuple[Diagnostic, ...] = ()

    def to_json(self) -> dict:
        return {
            "roots": [r.to_json() for r in self.roots],
            "promoted": [p.to_json() for p in self.promoted],
            "named_types": [t.to_json() for t in self.named_types],
            "warnings": [w.to_json() for w in self.warnings],
        }


def build_choice(run: list[tuple[ConstraintTuple, PlanMember]]) -> PlanChoice:
    """Fold one exclusive run into a choice.

    0:X runs mark every branch minOccurs="0"; 1:X runs keep default bounds.
    Mixing the two values in one run has no defined meaning and raises E502.
    """
    values = {constraint.p for constraint, _ in run}
    if len(values) != 1:
        names = ", ".join(_member_name(m) for _, m in run)
        raise TransformError(
            "E502",
            f"exclusive run over {names} mixes 0:X and 1:X; one run uses one value",
        )
    mandatory = values.pop() is Participation.EXCLUSIVE
    branch_occurs = Occurs(1, 1) if mandatory else Occurs(0, 1)
    branches = tuple(_with_occurs(member, branch_occurs) for _, member in run)
    return PlanChoice(branches)


def _member_name(member: PlanMember) -> str:
    if isinstance(member, PlanRef):
        return member.target
    if isinstance(member, PlanChoice):
        return "choice"
    return member.name


def _with_occurs(member: PlanMember, occurs: Occurs) -> PlanMember:
    if isinstance(member, PlanChoice):
        return member
    return replace(member, occurs=occurs)


@dataclass
class _Planner:
    schema: SchemaGraph
    warnings: list[Diagnostic] = field(default_factory=list)
    promoted: dict[str, PlanCsg | PlanElement | None] = field(default_factory=dict)
    named_types: dict[str, PlanCsg | None] = field(default_factory=dict)
    planned_csgs: set[str] = field(default_factory=set)
    root_names: tuple[str, ...] = ()

    def run(self) -> NestingPlan:
        self.root_names = schema_roots(self.schema)
        root_plans = [self._plan_csg(name, Occurs(1, 1), {name}) for name in self.root_names]
        self._drain_queues()
        self._warn_unreachable()
        promoted = tuple(p for p in self.promoted.values() if p is not None)
        named = tuple(t for t in self.named_types.values() if t is not None)
        return NestingPlan(
            roots=tuple(root_plans),
            promoted=promoted,
            named_types=named,
            warnings=tuple(self.warnings),
        )

    def _drain_queues(self) -> None:
        # Promotion and named-type planning may enqueue more of both.
        while True:
            pending_promo = [n for n, plan in self.promoted.items() if plan is None]
            pending_types = [n for n, plan in self.named_types.items() if plan is None]
            if not pending_promo and not pending_types:
                return
            for name in pending_promo:
                if self.schema.kind_of(name) == CSG:
                    self.promoted[name] = self._plan_csg(name, Occurs(1, 1), {name})
                else:
                    self.promoted[name] = PlanElement(name)
            for name in pending_types:
                self.named_types[name] = self._plan_csg(name, Occurs(1, 1), {name})

    def _warn_unreachable(self) -> None:
        for csg in self.schema.csgs:
            if csg.name not in self.planned_csgs:
                self.warnings.append(
                    Diagnostic(
                        "W501",
                        f"CSG {csg.name!r} is unreachable from every root and is "
                        f"not emitted",
                        csg.span or SourceSpan(),
                    )
                )

    def _promote(self, name: str) -> None:
        if name in self.root_names or name in self.promoted:
            return
        self.promoted[name] = None  # planned by _drain_queues

    def _plan_csg(self, name: str, occurs: Occurs, visited: set[str]) -> PlanCsg:
        schema = self.schema
        self.planned_csgs.add(name)
        csg = schema.csg(name)
        entries = layout_entries(schema, name)
        mixed = any(
            e.kind == "annotation" and e.constraint.theta == 0 for e in entries
        )

        def nest(child: str, child_occurs: Occurs) -> PlanMember:
            if child in visited:
                self._promote(child)
                return PlanRef(child, child_occurs)
            visited.add(child)
            return self._plan_csg(child, child_occurs, visited)

        def materialize(entry: LayoutEntry) -> PlanMember:
            if entry.constraint is None:  # esg-ref / csg-ref
                self._promote(entry.name)
                return PlanRef(entry.name, Occurs(1, 1))
            entry_occurs = degraded_occurs(entry.constraint)
            if entry.kind == "esg":
                xsd_type = ID_TYPE if entry.determinant else None
                return PlanElement(entry.name, entry_occurs, xsd_type)
            if entry.kind == "annotation":  # theta == 1; unordered set mixed above
                return PlanElement(entry.name, Occurs(1, 1))
            if entry.kind == "contained-ref":
                self._promote(entry.name)
                return PlanRef(entry.name, entry_occurs)
            return nest(entry.name, entry_occurs)

        members: list[PlanMember] = []
        for item in fold_entry_runs(entries):
            if isinstance(item, list):
                members.append(
                    build_choice([(e.constraint, materialize(e)) for e in item])
                )
            else:
                members.append(materialize(item))

        if csg.group_occurs is not None:
            group_occurs = degraded_occurs(csg.group_occurs)
        else:
            group_occurs = Occurs(1, 1)

        compositor: str | None = None
        if members:
            member_occurs = [
                Occurs(1, 1) if isinstance(m, PlanChoice) else m.occurs for m in members
            ]
            compositor, forced = choose_compositor(
                effective_theta(schema, name), member_occurs, group_occurs
            )
            if forced:
                self.warnings.append(
                    Diagnostic(
                        "W201",
                        f"CSG {name!r}: unordered members with repetition cannot use "
                        f"the any-order compositor; emitted a sequence instead",
                        csg.span or SourceSpan(),
                    )
                )

        extension_base: str | None = None
        for link in schema.links:
            if link.derived == name:
                extension_base = link.base
                if link.base not in self.named_types:
                    self.named_types[link.base] = None
                break  # single inheritance: first declared link wins

        return PlanCsg(
            name=name,
            occurs=occurs,
            compositor=compositor,
            compositor_occurs=group_occurs,
            mixed=mixed,
            extension_base=extension_base,
            members=tuple(members),
        )


def plan_nesting(schema: SchemaGraph) -> NestingPlan:
    """Depth-first nesting plan per root. Requires a validated schema."""
    return _Planner(schema).run()


# ---------------------------------------------------------------------------
# plan -> document


@dataclass(frozen=True)
class TransformResult:
    document: XsdDocument
    plan: NestingPlan
    warnings: tuple[Diagnostic, ...]


def transform(schema: SchemaGraph) -> TransformResult:
    """Full compilation: plan the nesting, then build the document.

    The schema must pass validation first; calling with a failing schema is
    an internal error.
    """
    report = validate(schema)
    if not report.ok:
        codes = ", ".join(
            sorted({d.code for d in report.diagnostics if d.severity == "error"})
        )
        raise TransformError(
            "E500", f"transform called on a schema with validation errors ({codes})"
        )
    plan = plan_nesting(schema)
    named_type_names = {t.name for t in plan.named_types}

    def particle_of(member: PlanMember):
        if isinstance(member, PlanElement):
            return XsdElement(name=member.name, type_name=member.xsd_type, occurs=member.occurs)
        if isinstance(member, PlanRef):
            return XsdElement(ref=member.target, occurs=member.occurs)
        if isinstance(member, PlanChoice):
            return XsdChoice(children=tuple(particle_of(b) for b in member.branches))
        return csg_element(member)

    def content_of(plan_csg: PlanCsg, named: bool) -> XsdComplexType:
        inner: XsdGroup | None = None
        if plan_csg.members:
            inner = XsdGroup(
                kind=plan_csg.compositor or "sequence",
                occurs=plan_csg.compositor_occurs,
                children=tuple(particle_of(m) for m in plan_csg.members),
            )
        content: XsdGroup | XsdExtension | None = inner
        if plan_csg.extension_base is not None:
            content = XsdExtension(plan_csg.extension_base, inner)
        return XsdComplexType(
            name=plan_csg.name if named else None,
            mixed=plan_csg.mixed,
            content=content,
        )

    def csg_element(plan_csg: PlanCsg) -> XsdElement:
        if plan_csg.name in named_type_names:
            # The named global type carries the content; usage sites refer to it.
            return XsdElement(
                name=plan_csg.name, type_name=plan_csg.name, occurs=plan_csg.occurs
            )
        return XsdElement(
            name=plan_csg.name, occurs=plan_csg.occurs, content=content_of(plan_csg, named=False)
        )

    elements = [csg_element(root) for root in plan.roots]
    for promoted in plan.promoted:
        if isinstance(promoted, PlanCsg):
            elements.append(csg_element(promoted))
        else:
            elements.append(XsdElement(name=promoted.name))
    types = [content_of(t, named=True) for t in plan.named_types]
    document = XsdDocument(tuple(elements), tuple(types))
    return TransformResult(document=document, plan=plan, warnings=plan.warnings)
