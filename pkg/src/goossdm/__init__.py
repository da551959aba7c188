"""goossdm: a compiler for layered graph-based conceptual schemas of
semi-structured data, targeting an XML Schema subset, with a structural
correspondence checker and XML instance tooling."""

__version__ = "0.1.0"

from .correspondence import (
    CorrespondenceReport,
    CorrespondenceRow,
    check_correspondence,
    mutation_suite,
)
from .diagnostics import Diagnostic, SourceSpan
from .dsl import compile_source, format_tree, lower, parse
from .errors import (
    GoossdmError,
    ModelError,
    SourceError,
    TransformError,
    UnknownCodeError,
    XsdError,
)
from .instances import (
    ConformanceReport,
    GenConfig,
    XmlDoc,
    XmlElement,
    generate,
    random_schema,
    read_xml,
    validate_instance,
    write_xml,
)
from .model import (
    AnnotationNode,
    AssociationConnector,
    AssociationEdge,
    ConnectorMember,
    ConstraintTuple,
    ContainmentEdge,
    CsgNode,
    EsgNode,
    LinkEdge,
    Participation,
    ReferenceEdge,
    SchemaGraph,
)
from .transform import (
    NestingPlan,
    TransformResult,
    build_choice,
    choose_compositor,
    map_participation,
    plan_nesting,
    transform,
)
from .validator import ValidationReport, explain, validate
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
    structurally_equal,
)
