"""An embeddable text-native knowledge graph.

Every object is a text; triples of texts are the only assertion form.
The package layers identity canonicalization, hierarchy closures,
closed-world class cardinality, and reification over a deduplicated
indexed triple store, with a line-oriented wire format and a CLI.
"""

from .core import (
    ABSTRACT,
    COMPLETE,
    DESCRIPTION,
    DOCUMENT,
    INCOMPLETE,
    NAME,
    NUMBER,
    STRING,
    TIME,
    ConflictingLabelError,
    Dictionary,
    EmptyTextError,
    OgError,
    TextObject,
    UnknownIdError,
    canonical_reserved,
    is_reserved_text,
    normalize_text,
)
from .query import (
    Binding,
    ProofStep,
    Query,
    QueryCertainty,
    QuerySyntaxError,
    StaleBindingError,
    UnboundProjectionError,
    Var,
    VarPattern,
    evaluate,
    explain,
    parse_query,
)
from .semantics import (
    AmbiguousAbstractError,
    Certainty,
    ChainedAbstractError,
    CountKind,
    EventNameCollisionError,
    EventReification,
    Finding,
    LabelSet,
    MembershipAnswer,
    MissingBaseTripleError,
    NonAbstractTargetError,
    Regime,
    canonical_map,
    canonicalize,
    class_membership,
    count_members,
    infer_match,
    label_set_of,
    reify,
    subrelation_closure,
    type_closure,
    validate,
)
from .store import (
    CorruptSnapshotError,
    Graph,
    LogEntry,
    Pattern,
    Triple,
    read_snapshot,
    replay_log,
    write_snapshot,
)
from .storedir import Store, StoreLockedError
from .wire import (
    BadEscapeError,
    Diagnostic,
    EmptyFieldError,
    FieldCountError,
    LineKind,
    ParsedTriple,
    Severity,
    Utf8Error,
    escape,
    parse_document,
    parse_line,
    serialize_fields,
    serialize_triple,
    unescape,
)

__version__ = "0.1.0"
