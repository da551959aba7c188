"""Graph data model for layered conceptual schemas of semi-structured data.

A schema is a layered graph: elementary semantic groups (ESGs, layer 0) hold
the instances of one attribute; contextual semantic groups (CSGs, layers >= 1)
encapsulate ESGs, annotations, and lower-layer CSGs; the topmost-layer CSGs
act as the roots of the schema. Edges carry a participation/ordering
constraint tuple. Values are immutable once constructed and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence, TypeVar

from .diagnostics import SourceSpan
from .errors import ModelError


class Participation(Enum):
    """The six participation values for containment and association tuples."""

    ONE = "1:1"
    OPTIONAL = "0:1"
    MANY = "1:M"
    OPTIONAL_MANY = "0:M"
    OPTIONAL_EXCLUSIVE = "0:X"
    EXCLUSIVE = "1:X"

    @property
    def is_exclusive(self) -> bool:
        return self in (Participation.OPTIONAL_EXCLUSIVE, Participation.EXCLUSIVE)

    def __str__(self) -> str:
        return self.value


PARTICIPATION_VALUES = {p.value: p for p in Participation}


@dataclass(frozen=True)
class ConstraintTuple:
    """The <p, theta> pair: participation plus ordering flag.

    Defaults (1:1, unordered) apply wherever the source omits the tuple.
    """

    p: Participation = Participation.ONE
    theta: int = 0

    def __post_init__(self) -> None:
        if self.theta not in (0, 1):
            raise ModelError(f"ordering flag must be 0 or 1, got {self.theta!r}")

    def __str__(self) -> str:
        return f"<{self.p},{self.theta}>"


DEFAULT_TUPLE = ConstraintTuple()


@dataclass(frozen=True)
class EsgNode:
    """Elementary semantic group: all instances of one attribute, no members."""

    name: str
    span: SourceSpan | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ModelError("ESG name must be nonempty")


@dataclass(frozen=True)
class CsgNode:
    """Contextual semantic group at a layer >= 1.

    ``group_occurs`` repeats the whole member group; it maps onto the
    compositor's occurrence bounds rather than onto any single member.
    """

    name: str
    layer: int
    group_occurs: ConstraintTuple | None = None
    span: SourceSpan | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ModelError("CSG name must be nonempty")
        if self.layer < 1:
            raise ModelError(f"CSG {self.name}: layer must be >= 1, got {self.layer}")


@dataclass(frozen=True)
class AnnotationNode:
    """Single text-content slot; enables document-centric/mixed modeling."""

    name: str
    span: SourceSpan | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ModelError("annotation name must be nonempty")


@dataclass(frozen=True)
class ContainmentEdge:
    """Membership of ``child`` in the parent CSG.

    ``is_reference`` marks a contained reference: the site refers to the
    target instead of encapsulating it. ``position`` is declaration order
    within the parent and defines the ordered (theta=1) layout.
    """

    parent: str
    child: str
    constraint: ConstraintTuple = DEFAULT_TUPLE
    is_determinant: bool = False
    is_reference: bool = False
    position: int = 0
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class AssociationEdge:
    """Binary association between two CSGs.

    For same-layer endpoints the second ("rightmost") endpoint hosts the
    nesting; across adjacent layers the upper endpoint does.
    """

    left: str
    right: str
    constraint: ConstraintTuple = DEFAULT_TUPLE
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ConnectorMember:
    csg: str
    constraint: ConstraintTuple = DEFAULT_TUPLE


@dataclass(frozen=True)
class AssociationConnector:
    """N-ary association. ``context`` is the CSG attached to the connector
    itself; the remaining members nest inside it."""

    name: str
    members: tuple[ConnectorMember, ...]
    context: ConnectorMember | None = None
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LinkEdge:
    """Inheritance: ``derived`` (one layer above) specializes ``base``."""

    base: str
    derived: str
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ReferenceEdge:
    """Symmetric relationship between two same-kind constructs."""

    source: str
    target: str
    span: SourceSpan | None = field(default=None, compare=False)


ESG = "esg"
CSG = "csg"
ANNOTATION = "annotation"
CONNECTOR = "connector"


@dataclass(frozen=True)
class SchemaGraph:
    """The whole conceptual model. Immutable; construction resolves names.

    Construction enforces only what makes the value well-formed (unique
    names, resolvable endpoints). Semantic rules with diagnostic codes live
    in :mod:`goossdm.validator` so that invalid-but-representable graphs can
    be built and reported on.
    """

    name: str
    esgs: tuple[EsgNode, ...] = ()
    csgs: tuple[CsgNode, ...] = ()
    annotations: tuple[AnnotationNode, ...] = ()
    containments: tuple[ContainmentEdge, ...] = ()
    associations: tuple[AssociationEdge, ...] = ()
    connectors: tuple[AssociationConnector, ...] = ()
    links: tuple[LinkEdge, ...] = ()
    references: tuple[ReferenceEdge, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for node in (*self.esgs, *self.csgs, *self.annotations, *self.connectors):
            if node.name in seen:
                raise ModelError(f"duplicate declaration name {node.name!r}")
            seen.add(node.name)
        for edge in self.containments:
            self._require(edge.parent, seen, "containment parent")
            self._require(edge.child, seen, "containment child")
        for assoc in self.associations:
            self._require(assoc.left, seen, "association endpoint")
            self._require(assoc.right, seen, "association endpoint")
        for conn in self.connectors:
            for member in conn.members:
                self._require(member.csg, seen, f"connector {conn.name} member")
            if conn.context is not None:
                self._require(conn.context.csg, seen, f"connector {conn.name} context")
        for link in self.links:
            self._require(link.base, seen, "link base")
            self._require(link.derived, seen, "link derived")
        for ref in self.references:
            self._require(ref.source, seen, "reference source")
            self._require(ref.target, seen, "reference target")

    @staticmethod
    def _require(name: str, declared: set[str], what: str) -> None:
        if name not in declared:
            raise ModelError(f"{what} {name!r} is not a declared node")

    # -- lookup ---------------------------------------------------------

    @cached_property
    def _kinds(self) -> dict[str, str]:
        kinds: dict[str, str] = {}
        for e in self.esgs:
            kinds[e.name] = ESG
        for c in self.csgs:
            kinds[c.name] = CSG
        for a in self.annotations:
            kinds[a.name] = ANNOTATION
        for k in self.connectors:
            kinds[k.name] = CONNECTOR
        return kinds

    @cached_property
    def _csg_by_name(self) -> dict[str, CsgNode]:
        return {c.name: c for c in self.csgs}

    def kind_of(self, name: str) -> str:
        try:
            return self._kinds[name]
        except KeyError:
            raise ModelError(f"unknown node {name!r}") from None

    def csg(self, name: str) -> CsgNode:
        node = self._csg_by_name.get(name)
        if node is None:
            raise ModelError(f"{name!r} is not a declared CSG")
        return node

    def layer_of(self, name: str) -> int:
        """Layer of a node: 0 for ESGs and annotations, the declared layer
        for CSGs."""
        kind = self.kind_of(name)
        if kind == CSG:
            return self._csg_by_name[name].layer
        if kind in (ESG, ANNOTATION):
            return 0
        raise ModelError(f"{name!r} is a connector and has no layer")

    @cached_property
    def max_layer(self) -> int:
        if not self.csgs:
            raise ModelError("schema declares no CSG")
        return max(c.layer for c in self.csgs)

    def roots(self) -> tuple[CsgNode, ...]:
        """All CSGs of the topmost layer, in declaration order."""
        top = self.max_layer
        return tuple(c for c in self.csgs if c.layer == top)

    def members_of(self, csg_name: str) -> tuple[ContainmentEdge, ...]:
        """Containment edges of one parent, in declaration order."""
        self.csg(csg_name)
        edges = [e for e in self.containments if e.parent == csg_name]
        edges.sort(key=lambda e: e.position)
        return tuple(edges)

    def exclusive_groups(self, csg_name: str) -> list[tuple[ContainmentEdge, ...]]:
        """Disjunction groups among a CSG's members.

        A group is a maximal run of consecutive members with an exclusive
        participation. Runs of size one degrade to plain optional/mandatory
        semantics and are not returned. Well-formed groups share a single
        participation value; mixed runs are still returned as one group and
        rejected downstream when the choice is built.
        """
        return exclusive_runs(self.members_of(csg_name), lambda e: e.constraint)

    # -- derived facts --------------------------------------------------

    def containment_parents(self, name: str) -> tuple[str, ...]:
        return tuple(
            e.parent for e in self.containments if e.child == name and not e.is_reference
        )

    def is_shared(self, esg_name: str) -> bool:
        """True when the ESG is directly contained by more than one CSG."""
        if self.kind_of(esg_name) != ESG:
            raise ModelError(f"{esg_name!r} is not an ESG")
        return len(self.containment_parents(esg_name)) > 1


def association_host(schema: SchemaGraph, edge: AssociationEdge) -> tuple[str, str]:
    """(host, partner) of a binary association.

    The host carries the nesting: across adjacent layers it is the upper
    endpoint; within one layer it is the second-declared ("rightmost")
    endpoint.
    """
    left_layer = schema.layer_of(edge.left)
    right_layer = schema.layer_of(edge.right)
    if left_layer > right_layer:
        return edge.left, edge.right
    return edge.right, edge.left


def connector_host(schema: SchemaGraph, connector: AssociationConnector) -> ConnectorMember:
    """The member that hosts the connector's nesting: the member of the
    highest layer, earliest-declared on ties."""
    if not connector.members:
        raise ModelError(f"connector {connector.name!r} has no members")
    best = connector.members[0]
    for member in connector.members[1:]:
        if schema.layer_of(member.csg) > schema.layer_of(best.csg):
            best = member
    return best


_T = TypeVar("_T")


def exclusive_runs(
    items: Sequence[_T], constraint_of: Callable[[_T], ConstraintTuple]
) -> list[tuple[_T, ...]]:
    """Maximal consecutive runs of exclusive-participation items, size >= 2.

    Shared by CSG member lists, connector member lists, and association
    partner lists: anywhere a disjunction group can form.
    """
    groups: list[tuple[_T, ...]] = []
    run: list[_T] = []
    for item in items:
        if constraint_of(item).p.is_exclusive:
            run.append(item)
        else:
            if len(run) >= 2:
                groups.append(tuple(run))
            run = []
    if len(run) >= 2:
        groups.append(tuple(run))
    return groups
