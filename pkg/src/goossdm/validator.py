"""Well-formedness rules for lowered schema graphs.

Validation is total: every rule runs even after the first failure so one
report covers the whole schema. Errors stop compilation, warnings do not.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import CODE_RULES, Diagnostic, SourceSpan, has_errors
from .errors import UnknownCodeError
from .model import (
    ANNOTATION,
    CSG,
    ESG,
    Participation,
    SchemaGraph,
    association_host,
)


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return not has_errors(self.diagnostics)

    def codes(self) -> tuple[str, ...]:
        return tuple(d.code for d in self.diagnostics)

    def to_json(self) -> list[dict]:
        return [d.to_json() for d in self.diagnostics]


def _span(obj) -> SourceSpan:
    return getattr(obj, "span", None) or SourceSpan()


def validate(schema: SchemaGraph) -> ValidationReport:
    """Check every structural rule; one diagnostic per violation."""
    diags: list[Diagnostic] = []

    for edge in schema.containments:
        child_kind = schema.kind_of(edge.child)
        if child_kind == ANNOTATION and not edge.is_reference:
            if edge.constraint.p != Participation.ONE:
                diags.append(
                    Diagnostic(
                        "E301",
                        f"annotation {edge.child!r} contained with participation "
                        f"{edge.constraint.p}; annotations always use 1:1",
                        _span(edge),
                    )
                )
        if edge.is_determinant and (edge.is_reference or child_kind != ESG):
            what = "a reference" if edge.is_reference else f"a {child_kind}"
            diags.append(
                Diagnostic(
                    "E304",
                    f"determinant flag on {edge.child!r} in {edge.parent!r}: "
                    f"the member is {what}, not a directly contained ESG",
                    _span(edge),
                )
            )
        if child_kind == CSG and not edge.is_reference:
            parent_layer = schema.layer_of(edge.parent)
            child_layer = schema.layer_of(edge.child)
            if child_layer != parent_layer - 1:
                diags.append(
                    Diagnostic(
                        "E303",
                        f"{edge.parent!r} (layer {parent_layer}) contains "
                        f"{edge.child!r} (layer {child_layer}); contained CSGs sit "
                        f"exactly one layer below their parent",
                        _span(edge),
                    )
                )

    cycle = _containment_cycle(schema)
    if cycle:
        diags.append(
            Diagnostic(
                "E303",
                "containment cycle through " + " -> ".join(cycle),
                _span(schema.csg(cycle[0])),
            )
        )

    for link in schema.links:
        base_layer = schema.layer_of(link.base)
        derived_layer = schema.layer_of(link.derived)
        if derived_layer != base_layer + 1:
            diags.append(
                Diagnostic(
                    "E302",
                    f"link {link.base!r} (layer {base_layer}) -> {link.derived!r} "
                    f"(layer {derived_layer}); the specialized CSG sits exactly one "
                    f"layer above its base",
                    _span(link),
                )
            )

    for assoc in schema.associations:
        delta = abs(schema.layer_of(assoc.left) - schema.layer_of(assoc.right))
        if delta > 1:
            diags.append(
                Diagnostic(
                    "E308",
                    f"association {assoc.left!r} -- {assoc.right!r} spans "
                    f"{delta} layers; endpoints must share a layer or sit on "
                    f"adjacent layers",
                    _span(assoc),
                )
            )

    for csg in schema.csgs:
        members = schema.members_of(csg.name)
        _check_consecutive_exclusives(
            [m.constraint for m in members],
            f"CSG {csg.name!r}",
            _span(csg),
            diags,
        )

    for connector in schema.connectors:
        if len(connector.members) < 2:
            diags.append(
                Diagnostic(
                    "E306",
                    f"connector {connector.name!r} has {len(connector.members)} "
                    f"member(s); a connector joins at least two",
                    _span(connector),
                )
            )
        _check_consecutive_exclusives(
            [m.constraint for m in connector.members],
            f"connector {connector.name!r}",
            _span(connector),
            diags,
        )

    # Binary association partners grouped per hosting CSG form disjunction
    # runs the same way members do.
    hosts: dict[str, list] = {}
    for assoc in schema.associations:
        try:
            host, _partner = association_host(schema, assoc)
        except Exception:
            continue
        hosts.setdefault(host, []).append(assoc)
    for host, edges in hosts.items():
        _check_consecutive_exclusives(
            [e.constraint for e in edges],
            f"associations hosted by {host!r}",
            _span(edges[0]),
            diags,
        )

    for ref in schema.references:
        src = schema.kind_of(ref.source)
        tgt = schema.kind_of(ref.target)
        if src != tgt or src not in (ESG, CSG):
            diags.append(
                Diagnostic(
                    "E307",
                    f"reference {ref.source!r} ({src}) -> {ref.target!r} ({tgt}): "
                    f"references join two ESGs or two CSGs",
                    _span(ref),
                )
            )

    used = {e.child for e in schema.containments}
    used |= {r.source for r in schema.references} | {r.target for r in schema.references}
    for esg in schema.esgs:
        if esg.name not in used:
            diags.append(
                Diagnostic(
                    "W301",
                    f"ESG {esg.name!r} is never contained and never referenced",
                    _span(esg),
                )
            )

    if schema.csgs and len(schema.roots()) > 1:
        names = ", ".join(c.name for c in schema.roots())
        diags.append(
            Diagnostic(
                "W302",
                f"multiple topmost CSGs ({names}); each becomes its own global element",
                _span(schema.roots()[0]),
            )
        )

    return ValidationReport(tuple(diags))


def _check_consecutive_exclusives(constraints, where: str, span, diags) -> None:
    flags = [c.p.is_exclusive for c in constraints]
    if not any(flags):
        return
    first = flags.index(True)
    last = len(flags) - 1 - flags[::-1].index(True)
    if not all(flags[first : last + 1]):
        diags.append(
            Diagnostic(
                "E305",
                f"{where}: exclusive members must be declared consecutively to "
                f"form one disjunction group",
                span,
            )
        )


def _containment_cycle(schema: SchemaGraph) -> list[str] | None:
    """Brute-force cycle detection over CSG->CSG containment.

    The layer adjacency rule already implies acyclicity; this guards graphs
    built programmatically with inconsistent layers.
    """
    children: dict[str, list[str]] = {c.name: [] for c in schema.csgs}
    for edge in schema.containments:
        if not edge.is_reference and schema.kind_of(edge.child) == CSG:
            children[edge.parent].append(edge.child)
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(name: str) -> list[str] | None:
        state[name] = 1
        stack.append(name)
        for child in children[name]:
            if state.get(child) == 1:
                return stack[stack.index(child) :] + [child]
            if state.get(child, 0) == 0:
                found = visit(child)
                if found:
                    return found
        stack.pop()
        state[name] = 2
        return None

    for csg in schema.csgs:
        if state.get(csg.name, 0) == 0:
            found = visit(csg.name)
            if found:
                return found
    return None


def explain(code: str) -> str:
    """Human-readable rule text behind a diagnostic code."""
    try:
        title, rule = CODE_RULES[code]
    except KeyError:
        raise UnknownCodeError(f"unknown diagnostic code {code!r}") from None
    return f"{code} ({title}): {rule}"


def all_codes() -> tuple[str, ...]:
    return tuple(CODE_RULES)
