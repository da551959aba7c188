"""Source spans, diagnostics, and the rule registry behind every code."""

from __future__ import annotations

from dataclasses import dataclass

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    """1-based (line, column) range in a source file."""

    file: str = "<input>"
    start_line: int = 1
    start_col: int = 1
    end_line: int = 1
    end_col: int = 1

    def __post_init__(self) -> None:
        if self.start_line < 1 or self.start_col < 1:
            raise ValueError("span positions are 1-based")
        if (self.end_line, self.end_col) < (self.start_line, self.start_col):
            raise ValueError("span end precedes start")

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


@dataclass(frozen=True)
class Diagnostic:
    """A coded finding attached to a source location.

    Error-severity diagnostics stop the pipeline; warnings are reported
    and compilation continues.
    """

    code: str
    message: str
    span: SourceSpan = SourceSpan()

    @property
    def severity(self) -> str:
        return WARNING if self.code.startswith("W") else ERROR

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "file": self.span.file,
            "line": self.span.start_line,
            "col": self.span.start_col,
        }

    def __str__(self) -> str:
        return f"{self.severity}[{self.code}] {self.span}: {self.message}"


def has_errors(diagnostics) -> bool:
    return any(d.severity == ERROR for d in diagnostics)


# Registry of every diagnostic code: short title plus the rule it enforces.
# Rule identifiers name the model-level rule a code polices, so messages can
# point at behaviour instead of at a code number.
CODE_RULES: dict[str, tuple[str, str]] = {
    "E101": ("unexpected token", "source must follow the schema grammar"),
    "E102": (
        "invalid participation value",
        "participation must be one of 1:1, 0:1, 1:M, 0:M, 0:X, 1:X",
    ),
    "E103": ("invalid ordering flag", "the ordering flag is 0 (unordered) or 1 (ordered)"),
    "E104": ("duplicate name", "declared names share one namespace and must be unique"),
    "E105": ("unresolved name", "every identifier must refer to a declared construct"),
    "E106": (
        "wrong construct kind",
        "references join same-kind constructs; relationship endpoints must be groups "
        "of the kind the relationship expects",
    ),
    "E301": (
        "annotation participation fixed",
        "an annotation is always contained with participation 1:1; only its ordering "
        "flag varies (1 keeps the text in order, 0 mixes it with sibling content)",
    ),
    "E302": (
        "link layers not adjacent",
        "an inheritance link joins a base group to a specialized group exactly one "
        "layer above it",
    ),
    "E303": (
        "containment layers broken",
        "a contained group sits exactly one layer below its parent, so containment "
        "forms an acyclic hierarchy",
    ),
    "E304": (
        "determinant must be an elementary group",
        "only an elementary group directly contained by the parent can be its "
        "determinant (it becomes an ID-typed element)",
    ),
    "E305": (
        "exclusive members not consecutive",
        "members with an exclusive participation (0:X or 1:X) must be declared "
        "consecutively; one consecutive run forms one disjunction group",
    ),
    "E306": ("connector too small", "an association connector needs at least two members"),
    "E307": (
        "reference kind mismatch",
        "a reference joins two elementary groups or two contextual groups, never a mix",
    ),
    "E308": (
        "association layers not adjacent",
        "a binary association joins groups of the same layer or of adjacent layers",
    ),
    "E401": ("malformed XML", "schema documents must be well-formed XML"),
    "E402": (
        "outside the supported schema subset",
        "only xs:schema, xs:element, xs:complexType, xs:sequence, xs:all, xs:choice "
        "and xs:complexContent/xs:extension are accepted",
    ),
    "E502": (
        "mixed exclusive values in one run",
        "one consecutive exclusive run must use a single participation value; "
        "0:X and 1:X cannot share a disjunction group",
    ),
    "E503": (
        "association cycle",
        "associations between top-layer groups must leave at least one group to act "
        "as a root; a cycle leaves none",
    ),
    "W201": (
        "unordered group forced to sequence",
        "an unordered member set with a repeating member (or repeating group) cannot "
        "use the any-order compositor and falls back to a sequence",
    ),
    "W301": ("orphan elementary group", "the group is never contained and never referenced"),
    "W302": (
        "multiple roots",
        "several groups occupy the topmost layer; each becomes its own global element",
    ),
    "W501": ("unreachable group", "the group appears in no root tree and is never emitted"),
    "V601": ("unexpected child", "the element is not allowed by the content model here"),
    "V602": ("missing required child", "a mandatory element of the content model is absent"),
    "V603": (
        "occurrence bounds violated",
        "an element or group repeats more often than maxOccurs or less often than minOccurs",
    ),
    "V604": (
        "choice violation",
        "each repetition unit instantiates exactly one branch of a choice (or none, "
        "when every branch carries minOccurs 0)",
    ),
    "V605": ("duplicate ID value", "ID-typed values are unique across one document"),
    "V606": ("unexpected text", "text may mix with elements only under mixed content"),
}
