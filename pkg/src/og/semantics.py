"""Graph semantics layered over raw storage.

Abstract-identity canonicalization, type and sub-relation closures,
closed/open-world class cardinality, triple reification, and the
whole-graph validation pass. All operations here are read-only except
``reify``, which writes through the store's single-writer contract.

Canonicalization is one hop by design: an object maps to the target of
its single ``abstract to`` edge when that target carries the Abstract
text label and has no outgoing ``abstract to`` edge of its own. Anything
else is a validation finding, and the lenient mapping used by queries
falls back to the object itself, which keeps the mapping idempotent even
on graphs that have findings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Iterable

from .core import (
    ABSTRACT,
    COMPLETE,
    DESCRIPTION,
    INCOMPLETE,
    LABEL_VALUE_SETS,
    NUMBER,
    REL_ABSTRACT_TO,
    REL_CLASS_LABEL,
    REL_FORMAT_LABEL,
    REL_OBJECT,
    REL_RELATION,
    REL_SUBJECT,
    REL_SUB_RELATION,
    REL_TEXT_LABEL,
    REL_TYPE,
    TIME,
    ConflictingLabelError,
    OgError,
)
from .store import Graph, Pattern, Triple
from .wire import Severity


class AmbiguousAbstractError(OgError):
    """An object has more than one outgoing ``abstract to`` edge."""


class NonAbstractTargetError(OgError):
    """An ``abstract to`` target lacks the Abstract text label."""


class ChainedAbstractError(OgError):
    """An ``abstract to`` target has an ``abstract to`` edge of its own."""


class EventNameCollisionError(OgError):
    """The event name already reifies a different base triple."""


class MissingBaseTripleError(OgError):
    """reify() requires the base triple to be asserted first."""


# ---------------------------------------------------------------------------
# Label derivation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelSet:
    """Per-object labels, derived purely from label triples."""

    text_label: str | None = None
    format_label: str | None = None
    class_label: str = INCOMPLETE


def label_values(g: Graph, obj: int) -> dict[str, set[str]]:
    """Recognized label values per dimension; lenient about conflicts."""
    out: dict[str, set[str]] = {}
    for relation_text, allowed in LABEL_VALUE_SETS.items():
        relation = g.lookup(relation_text)
        values = {
            g.text_of(t.tail)
            for t in g.match(Pattern(head=obj, relation=relation))
            if g.text_of(t.tail) in allowed
        }
        if values:
            out[relation_text] = values
    return out


def label_set_of(g: Graph, obj: int) -> LabelSet:
    """Labels of ``obj``. Raises ConflictingLabelError on a two-valued
    dimension rather than picking a winner."""
    g.text_of(obj)  # raises UnknownIdError for foreign ids
    values = label_values(g, obj)
    for dimension, found in values.items():
        if len(found) > 1:
            raise ConflictingLabelError(g.text_of(obj), dimension, found)

    def single(dimension: str) -> str | None:
        found = values.get(dimension)
        return next(iter(found)) if found else None

    return LabelSet(
        text_label=single(REL_TEXT_LABEL),
        format_label=single(REL_FORMAT_LABEL),
        class_label=single(REL_CLASS_LABEL) or INCOMPLETE,
    )


def has_label_triple(g: Graph, obj: int, relation_text: str, value_text: str) -> bool:
    """True iff the exact label triple is asserted."""
    relation = g.lookup(relation_text)
    value = g.lookup(value_text)
    if relation is None or value is None:
        return False
    return Triple(obj, relation, value) in g


# ---------------------------------------------------------------------------
# Abstract-identity canonicalization
# ---------------------------------------------------------------------------


def abstract_targets(g: Graph, x: int) -> list[int]:
    relation = g.lookup(REL_ABSTRACT_TO)
    return [t.tail for t in g.match(Pattern(head=x, relation=relation))]


def canonicalize(g: Graph, x: int, lenient: bool = False) -> int:
    """Canonical object for ``x``: the target of its ``abstract to`` edge,
    or ``x`` itself when it has none.

    Strict mode raises AmbiguousAbstractError, NonAbstractTargetError, or
    ChainedAbstractError on malformed identity structure; lenient mode
    falls back to ``x`` in those cases.
    """
    g.text_of(x)
    targets = abstract_targets(g, x)
    if not targets:
        return x
    if len(targets) > 1:
        if lenient:
            return x
        raise AmbiguousAbstractError(
            f"{g.text_of(x)!r} has {len(targets)} abstract targets"
        )
    target = targets[0]
    if not has_label_triple(g, target, REL_TEXT_LABEL, ABSTRACT):
        if lenient:
            return x
        raise NonAbstractTargetError(
            f"{g.text_of(target)!r} is not labeled {ABSTRACT}"
        )
    if abstract_targets(g, target):
        if lenient:
            return x
        raise ChainedAbstractError(
            f"{g.text_of(target)!r} has an abstract edge of its own"
        )
    return target


def canonical_map(g: Graph) -> dict[int, int]:
    """Lenient object-to-canonical mapping for every aliased object.

    Objects absent from the mapping are their own canonical form; read
    it with ``mapping.get(x, x)``. Cached per graph version.
    """

    def build() -> dict[int, int]:
        relation = g.lookup(REL_ABSTRACT_TO)
        sources = {t.head for t in g.match(Pattern(relation=relation))}
        mapping: dict[int, int] = {}
        for x in sources:
            canonical = canonicalize(g, x, lenient=True)
            if canonical != x:
                mapping[x] = canonical
        return mapping

    return g.cached("canonical_map", build)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Hierarchy closures
# ---------------------------------------------------------------------------


def _reachable(edges: dict[int, set[int]], start: int) -> set[int]:
    seen: set[int] = set()
    stack = list(edges.get(start, ()))
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(edges.get(node, ()))
    return seen


def _type_edges(g: Graph) -> dict[int, set[int]]:
    def build() -> dict[int, set[int]]:
        relation = g.lookup(REL_TYPE)
        mapping = canonical_map(g)
        edges: dict[int, set[int]] = {}
        for t in g.match(Pattern(relation=relation)):
            head = mapping.get(t.head, t.head)
            tail = mapping.get(t.tail, t.tail)
            edges.setdefault(head, set()).add(tail)
        return edges

    return g.cached("type_edges", build)  # type: ignore[return-value]


def _sub_relation_edges(g: Graph) -> dict[int, set[int]]:
    def build() -> dict[int, set[int]]:
        relation = g.lookup(REL_SUB_RELATION)
        edges: dict[int, set[int]] = {}
        for t in g.match(Pattern(relation=relation)):
            edges.setdefault(t.head, set()).add(t.tail)
        return edges

    return g.cached("sub_relation_edges", build)  # type: ignore[return-value]


def type_closure(g: Graph, x: int) -> set[int]:
    """Objects reachable from canonicalize(x) through one or more type
    edges, the edges themselves taken between canonical endpoints."""
    g.text_of(x)
    mapping = canonical_map(g)
    return _reachable(_type_edges(g), mapping.get(x, x))


def subrelation_closure(g: Graph, r: int) -> set[int]:
    """Reflexive-transitive up-set of ``r`` over ``sub-relation of``."""
    g.text_of(r)
    closure = _reachable(_sub_relation_edges(g), r)
    closure.add(r)
    return closure


def _relation_down_sets(g: Graph) -> dict[int, set[int]]:
    """For each relation, the stored relations whose up-closure reaches it."""

    def build() -> dict[int, set[int]]:
        stored = {t.relation for t in g.triples()}
        stored.update(_sub_relation_edges(g))
        down: dict[int, set[int]] = {}
        for source in stored:
            for above in subrelation_closure(g, source):
                down.setdefault(above, set()).add(source)
        return down

    return g.cached("relation_down_sets", build)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Inference regimes
# ---------------------------------------------------------------------------


class Regime(str, Enum):
    RAW = "raw"
    CANONICAL = "canonical"
    FULL = "full"


def infer_match(g: Graph, pattern: Pattern, regime: Regime = Regime.RAW) -> list[Triple]:
    """Match under an inference regime, returning stored triples.

    Raw is plain storage matching. Canonical compares heads and tails
    through the canonical mapping, on both the pattern and the stored
    triples. Full additionally lets a stored relation satisfy any of its
    super-relations. Results are the stored originals, deduplicated and
    ordered by component ids.
    """
    if regime is Regime.RAW:
        return g.match(pattern)
    for obj_id in pattern.components:
        if obj_id is not None:
            g.text_of(obj_id)

    mapping = canonical_map(g)
    want_head = mapping.get(pattern.head, pattern.head) if pattern.head is not None else None
    want_tail = mapping.get(pattern.tail, pattern.tail) if pattern.tail is not None else None

    if pattern.relation is None:
        pool: Iterable[Triple] = g.triples()
    else:
        if regime is Regime.FULL:
            relations = set(_relation_down_sets(g).get(pattern.relation, ()))
            relations.add(pattern.relation)
        else:
            relations = {pattern.relation}
        pool = (
            t for relation in sorted(relations)
            for t in g.match(Pattern(relation=relation))
        )

    out = [
        t
        for t in pool
        if (want_head is None or mapping.get(t.head, t.head) == want_head)
        and (want_tail is None or mapping.get(t.tail, t.tail) == want_tail)
    ]
    out.sort()
    return out


# ---------------------------------------------------------------------------
# Class completeness
# ---------------------------------------------------------------------------


class Certainty(Enum):
    EXACT = "exact"
    LOWER_BOUND = "lower-bound"


class CountKind(Enum):
    EXACT = "exact"
    AT_LEAST = "at-least"


@dataclass(frozen=True)
class MembershipAnswer:
    members: frozenset[int]
    certainty: Certainty


def class_membership(g: Graph, c: int) -> MembershipAnswer:
    """Direct members of class ``c``, canonicalized.

    The answer is Exact only when the explicit Complete label triple is
    asserted on ``c``; otherwise it is a lower bound, the default.
    """
    g.text_of(c)
    relation = g.lookup(REL_TYPE)
    mapping = canonical_map(g)
    members = frozenset(
        mapping.get(t.head, t.head)
        for t in g.match(Pattern(relation=relation, tail=c))
    )
    exact = has_label_triple(g, c, REL_CLASS_LABEL, COMPLETE)
    return MembershipAnswer(members, Certainty.EXACT if exact else Certainty.LOWER_BOUND)


def count_members(g: Graph, c: int) -> tuple[int, CountKind]:
    answer = class_membership(g, c)
    kind = CountKind.EXACT if answer.certainty is Certainty.EXACT else CountKind.AT_LEAST
    return (len(answer.members), kind)


# ---------------------------------------------------------------------------
# Reification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventReification:
    event: int
    base: Triple
    extras: frozenset[Triple]


_POSITION_RELATIONS = (REL_SUBJECT, REL_RELATION, REL_OBJECT)


def reify(g: Graph, base: Triple, event_name: str | None = None) -> EventReification:
    """Promote ``base`` to an event object with subject, relation, and
    object edges plus a Description text label.

    The event name defaults to the three component texts joined by
    single spaces. Reifying the same base under the same name again is a
    no-op; a name already tied to a different base raises
    EventNameCollisionError.
    """
    if base not in g:
        raise MissingBaseTripleError(
            "base triple must be asserted before it can be reified"
        )
    name = event_name if event_name is not None else " ".join(g.texts_of(base))
    event = g.intern(name)

    expected = dict(zip(_POSITION_RELATIONS, base))
    for relation_text, component in expected.items():
        existing = [
            t.tail
            for t in g.match(Pattern(head=event, relation=g.lookup(relation_text)))
        ]
        if existing and (len(existing) > 1 or existing[0] != component):
            raise EventNameCollisionError(
                f"{name!r} already reifies a different triple"
            )

    for relation_text, component in expected.items():
        g.assert_triple(Triple(event, g.intern(relation_text), component))
    g.assert_triple(
        Triple(event, g.intern(REL_TEXT_LABEL), g.intern(DESCRIPTION))
    )

    skeleton = {g.lookup(text) for text in _POSITION_RELATIONS + (REL_TEXT_LABEL,)}
    extras = frozenset(
        t for t in g.match(Pattern(head=event)) if t.relation not in skeleton
    )
    return EventReification(event, base, extras)


# ---------------------------------------------------------------------------
# Literal format grammars
# ---------------------------------------------------------------------------

_TIME_RE = re.compile(
    r"^\d{4}"
    r"(?:-(?P<m1>\d{2})(?:-(?P<d1>\d{2}))?|\.(?P<m2>\d{2})\.(?P<d2>\d{2}))?"
    r"(?:T(?P<h>\d{2}):(?P<min>\d{2}):(?P<s>\d{2}))?$"
)

_NUMBER_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d+)?$")


def is_time_text(text: str) -> bool:
    """Calendar dates: bare year, year-month, full date (dashed or the
    dotted day form), optionally followed by Thh:mm:ss."""
    m = _TIME_RE.match(text)
    if m is None:
        return False
    month = m.group("m1") or m.group("m2")
    day = m.group("d1") or m.group("d2")
    if month is not None and not 1 <= int(month) <= 12:
        return False
    if day is not None and not 1 <= int(day) <= 31:
        return False
    if m.group("h") is not None:
        if day is None:
            return False
        if int(m.group("h")) > 23 or int(m.group("min")) > 59 or int(m.group("s")) > 59:
            return False
    return True


def is_number_text(text: str) -> bool:
    """Optional sign, decimal integer or fraction, optional exponent."""
    return _NUMBER_RE.match(text) is not None


# ---------------------------------------------------------------------------
# Whole-graph validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value} {self.code} {self.subject} — {self.message}"


def _strongly_connected_cycles(edges: dict[int, set[int]]) -> list[set[int]]:
    """Cyclic strongly connected components: multi-node SCCs plus
    self-loops. Iterative Tarjan, safe on deep graphs."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = 0
    cycles: list[set[int]] = []
    nodes = set(edges)
    for targets in edges.values():
        nodes.update(targets)

    for root in nodes:
        if root in index:
            continue
        work: list[tuple[int, Iterable[int]]] = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, children = work[-1]
            advanced = False
            for child in children:
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(edges.get(child, ()))))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component: set[int] = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.add(member)
                    if member == node:
                        break
                if len(component) > 1 or any(
                    node in edges.get(node, ()) for node in component
                ):
                    cycles.append(component)
    return cycles


def _cycle_findings(g: Graph, edges: dict[int, set[int]], code: str) -> list[Finding]:
    findings = []
    for component in _strongly_connected_cycles(edges):
        texts = sorted(g.text_of(node) for node in component)
        findings.append(
            Finding(
                Severity.WARNING,
                code,
                texts[0],
                "cycle through " + ", ".join(repr(t) for t in texts),
            )
        )
    return findings


def validate(g: Graph) -> list[Finding]:
    """Check every structural rule, returning findings instead of raising.

    Error findings break identity or reification structure; warnings
    are advisory (hierarchy cycles, literal format mismatches).
    """
    findings: list[Finding] = []

    # Abstract-identity structure.
    abstract_relation = g.lookup(REL_ABSTRACT_TO)
    edges_by_source: dict[int, list[int]] = {}
    for t in g.match(Pattern(relation=abstract_relation)):
        edges_by_source.setdefault(t.head, []).append(t.tail)
    flagged_targets: set[int] = set()
    for source, targets in edges_by_source.items():
        if len(targets) > 1:
            findings.append(
                Finding(
                    Severity.ERROR,
                    "AmbiguousAbstract",
                    g.text_of(source),
                    f"{len(targets)} outgoing abstract edges; exactly one is allowed",
                )
            )
        for target in targets:
            if not has_label_triple(g, target, REL_TEXT_LABEL, ABSTRACT):
                findings.append(
                    Finding(
                        Severity.ERROR,
                        "NonAbstractTarget",
                        g.text_of(target),
                        f"abstract target of {g.text_of(source)!r} lacks the "
                        f"{ABSTRACT} label",
                    )
                )
            if target in edges_by_source and target not in flagged_targets:
                flagged_targets.add(target)
                findings.append(
                    Finding(
                        Severity.ERROR,
                        "ChainedAbstract",
                        g.text_of(target),
                        "abstract target has an abstract edge of its own; "
                        "chains are not followed",
                    )
                )

    # Hierarchy cycles.
    findings.extend(_cycle_findings(g, _type_edges(g), "TypeCycle"))
    findings.extend(_cycle_findings(g, _sub_relation_edges(g), "SubRelationCycle"))

    # Label conflicts.
    labeled: set[int] = set()
    for relation_text in LABEL_VALUE_SETS:
        relation = g.lookup(relation_text)
        labeled.update(t.head for t in g.match(Pattern(relation=relation)))
    for obj in sorted(labeled):
        for dimension, values in label_values(g, obj).items():
            if len(values) > 1:
                findings.append(
                    Finding(
                        Severity.ERROR,
                        "ConflictingLabel",
                        g.text_of(obj),
                        f"{dimension} is both "
                        + " and ".join(sorted(values)),
                    )
                )

    # Reification structure.
    position_ids = {text: g.lookup(text) for text in _POSITION_RELATIONS}
    events: dict[int, dict[str, list[int]]] = {}
    for text, relation in position_ids.items():
        for t in g.match(Pattern(relation=relation)):
            events.setdefault(t.head, {}).setdefault(text, []).append(t.tail)
    for event, positions in sorted(events.items()):
        missing = [text for text in _POSITION_RELATIONS if not positions.get(text)]
        if missing:
            findings.append(
                Finding(
                    Severity.ERROR,
                    "IncompleteReification",
                    g.text_of(event),
                    "missing " + ", ".join(missing) + " edge",
                )
            )
            continue
        combos = product(
            positions[REL_SUBJECT], positions[REL_RELATION], positions[REL_OBJECT]
        )
        if not any(Triple(*combo) in g for combo in combos):
            findings.append(
                Finding(
                    Severity.ERROR,
                    "DanglingReification",
                    g.text_of(event),
                    "reassembled base triple is not asserted",
                )
            )

    # Format-label grammars.
    format_relation = g.lookup(REL_FORMAT_LABEL)
    for marker, check, code in (
        (TIME, is_time_text, "BadTimeFormat"),
        (NUMBER, is_number_text, "BadNumberFormat"),
    ):
        marker_id = g.lookup(marker)
        for t in g.match(Pattern(relation=format_relation, tail=marker_id)):
            text = g.text_of(t.head)
            if not check(text):
                findings.append(
                    Finding(
                        Severity.WARNING,
                        code,
                        text,
                        f"text does not fit the {marker} grammar",
                    )
                )

    findings.sort(key=lambda f: (f.severity.value, f.code, f.subject, f.message))
    return findings
