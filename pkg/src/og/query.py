"""Conjunctive triple-pattern queries with variables.

A query is an ordered list of patterns whose terms are bound texts or
``?name`` variables, evaluated as a natural join under a chosen
inference regime. Under the canonical and full regimes variables in head
and tail positions bind to canonical objects, so a binding set never
depends on which alias of an object happened to appear in a pattern or
on the order patterns were written in.

Answers carry a certainty flag: possibly-incomplete whenever any
``(?var, type, Class)`` pattern touches a class without the explicit
Complete label, certain otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, Mapping, Union

from .core import COMPLETE, REL_ABSTRACT_TO, REL_CLASS_LABEL, REL_SUB_RELATION, REL_TYPE, OgError
from .semantics import Regime, canonical_map, has_label_triple, infer_match
from .store import Graph, Pattern, Triple
from .wire import SEPARATOR, LineKind, WireError, parse_line


class UnboundProjectionError(OgError):
    """Projection names a variable that occurs in no pattern."""


class StaleBindingError(OgError):
    """The graph changed since this binding was produced."""


class QuerySyntaxError(OgError):
    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


@dataclass(frozen=True)
class Var:
    name: str


Term = Union[str, Var]


@dataclass(frozen=True)
class VarPattern:
    head: Term
    relation: Term
    tail: Term

    @property
    def terms(self) -> tuple[Term, Term, Term]:
        return (self.head, self.relation, self.tail)

    def variables(self) -> set[str]:
        return {term.name for term in self.terms if isinstance(term, Var)}


class QueryCertainty(Enum):
    CERTAIN = "certain"
    POSSIBLY_INCOMPLETE = "possibly-incomplete"


@dataclass(frozen=True)
class Query:
    patterns: tuple[VarPattern, ...]
    regime: Regime = Regime.RAW
    # None projects every variable in name order
    projection: tuple[str, ...] | None = None

    def variables(self) -> set[str]:
        out: set[str] = set()
        for pattern in self.patterns:
            out |= pattern.variables()
        return out

    def with_regime(self, regime: Regime) -> "Query":
        return replace(self, regime=regime)


@dataclass(frozen=True)
class Binding:
    assignment: Mapping[str, int]
    certainty: QueryCertainty
    graph_version: int


@dataclass(frozen=True)
class ProofStep:
    """One pattern's supporting evidence: the stored triple that matched
    it, plus the identity and hierarchy triples the match relied on."""

    pattern_index: int
    triple: Triple
    abstract_steps: tuple[Triple, ...] = ()
    relation_steps: tuple[Triple, ...] = ()


def _query_certainty(g: Graph, q: Query) -> QueryCertainty:
    for pattern in q.patterns:
        if (
            isinstance(pattern.head, Var)
            and pattern.relation == REL_TYPE
            and isinstance(pattern.tail, str)
        ):
            c = g.lookup(pattern.tail)
            if c is None or not has_label_triple(g, c, REL_CLASS_LABEL, COMPLETE):
                return QueryCertainty.POSSIBLY_INCOMPLETE
    return QueryCertainty.CERTAIN


def _order_patterns(q: Query) -> list[tuple[int, VarPattern]]:
    """Most-bound-first greedy order; semantically invisible."""
    remaining = list(enumerate(q.patterns))
    bound_vars: set[str] = set()
    ordered: list[tuple[int, VarPattern]] = []
    while remaining:
        def bound_terms(item: tuple[int, VarPattern]) -> int:
            _, pattern = item
            return sum(
                1
                for term in pattern.terms
                if isinstance(term, str) or term.name in bound_vars
            )

        best = max(remaining, key=lambda item: (bound_terms(item), -item[0]))
        remaining.remove(best)
        ordered.append(best)
        bound_vars |= best[1].variables()
    return ordered


def _resolve(
    g: Graph, pattern: VarPattern, assignment: Mapping[str, int]
) -> tuple[Pattern, list[tuple[int, str]]] | None:
    """Substitute bound texts and assigned variables into a store
    pattern. None means a bound text is not interned, so nothing can
    match. Returns the pattern and the still-free (position, name) vars.
    """
    ids: list[int | None] = []
    free: list[tuple[int, str]] = []
    for position, term in enumerate(pattern.terms):
        if isinstance(term, Var):
            if term.name in assignment:
                ids.append(assignment[term.name])
            else:
                ids.append(None)
                free.append((position, term.name))
        else:
            obj = g.lookup(term)
            if obj is None:
                return None
            ids.append(obj)
    return Pattern(*ids), free


def evaluate(g: Graph, q: Query) -> list[Binding]:
    """All bindings of the natural join of the query's patterns.

    Deterministic order: sorted by the projected variables' texts, then
    by the remaining variables'. Raises UnboundProjectionError if the
    projection names an unknown variable.
    """
    variables = q.variables()
    if q.projection is not None:
        for name in q.projection:
            if name not in variables:
                raise UnboundProjectionError(
                    f"projected variable ?{name} occurs in no pattern"
                )
        projection = q.projection
    else:
        projection = tuple(sorted(variables))

    mapping = canonical_map(g) if q.regime is not Regime.RAW else {}
    canonical_positions = (0, 2)

    assignments: list[dict[str, int]] = [{}]
    for _, pattern in _order_patterns(q):
        extended: list[dict[str, int]] = []
        seen: set[tuple[tuple[str, int], ...]] = set()
        for assignment in assignments:
            resolved = _resolve(g, pattern, assignment)
            if resolved is None:
                continue
            store_pattern, free = resolved
            for triple in infer_match(g, store_pattern, q.regime):
                candidate = dict(assignment)
                consistent = True
                for position, name in free:
                    value = triple[position]
                    if q.regime is not Regime.RAW and position in canonical_positions:
                        value = mapping.get(value, value)
                    if name in candidate and candidate[name] != value:
                        consistent = False
                        break
                    candidate[name] = value
                if not consistent:
                    continue
                key = tuple(sorted(candidate.items()))
                if key not in seen:
                    seen.add(key)
                    extended.append(candidate)
        assignments = extended
        if not assignments:
            break

    certainty = _query_certainty(g, q)
    secondary = tuple(name for name in sorted(variables) if name not in projection)

    def sort_key(assignment: dict[str, int]) -> tuple[str, ...]:
        return tuple(
            g.text_of(assignment[name]) for name in projection + secondary
        )

    return [
        Binding(assignment, certainty, g.version)
        for assignment in sorted(assignments, key=sort_key)
    ]


def _subrelation_path(g: Graph, start: int, goal: int) -> list[Triple]:
    """Shortest chain of sub-relation triples from start up to goal."""
    if start == goal:
        return []
    relation = g.lookup(REL_SUB_RELATION)
    parents: dict[int, int] = {}
    frontier = [start]
    while frontier and goal not in parents:
        next_frontier = []
        for node in frontier:
            for t in g.match(Pattern(head=node, relation=relation)):
                if t.tail not in parents and t.tail != start:
                    parents[t.tail] = node
                    next_frontier.append(t.tail)
        frontier = next_frontier
    if goal not in parents:
        raise StaleBindingError("no sub-relation path supports this binding")
    path: list[Triple] = []
    node = goal
    while node != start:
        parent = parents[node]
        path.append(Triple(parent, relation, node))  # type: ignore[arg-type]
        node = parent
    path.reverse()
    return path


def explain(g: Graph, q: Query, binding: Binding) -> list[ProofStep]:
    """Proof trace for one binding: per pattern, a stored triple that
    satisfies it and any abstract or sub-relation edges the match used.

    Raises StaleBindingError if the graph has changed since the binding
    was produced.
    """
    if binding.graph_version != g.version:
        raise StaleBindingError("graph changed since this binding was produced")
    mapping = canonical_map(g) if q.regime is not Regime.RAW else {}
    abstract_relation = g.lookup(REL_ABSTRACT_TO)

    steps: list[ProofStep] = []
    for index, pattern in enumerate(q.patterns):
        resolved = _resolve(g, pattern, binding.assignment)
        if resolved is None:
            raise StaleBindingError("bound text no longer interned")
        store_pattern, free = resolved
        if free:
            raise StaleBindingError("binding does not cover every variable")
        matches = infer_match(g, store_pattern, q.regime)
        if not matches:
            raise StaleBindingError("no stored triple satisfies this binding")
        triple = matches[0]

        abstract_steps: list[Triple] = []
        if q.regime is not Regime.RAW:
            for stored, wanted in (
                (triple.head, store_pattern.head),
                (triple.tail, store_pattern.tail),
            ):
                for obj in dict.fromkeys((stored, wanted)):
                    canonical = mapping.get(obj, obj)
                    if canonical != obj:
                        abstract_steps.append(
                            Triple(obj, abstract_relation, canonical)  # type: ignore[arg-type]
                        )

        relation_steps: list[Triple] = []
        if (
            q.regime is Regime.FULL
            and store_pattern.relation is not None
            and triple.relation != store_pattern.relation
        ):
            relation_steps = _subrelation_path(g, triple.relation, store_pattern.relation)

        steps.append(
            ProofStep(
                index,
                triple,
                tuple(dict.fromkeys(abstract_steps)),
                tuple(relation_steps),
            )
        )
    return steps


# ---------------------------------------------------------------------------
# Textual query syntax
# ---------------------------------------------------------------------------


def _parse_header_vars(rest: str, line_number: int, offset: int) -> tuple[str, ...]:
    names: list[str] = []
    column = offset
    for token in rest.split():
        column = rest.find(token, column - offset) + offset
        if not token.startswith("?") or len(token) < 2:
            raise QuerySyntaxError(
                f"SELECT expects ?name terms, got {token!r}", line_number, column
            )
        names.append(token[1:])
    if not names:
        raise QuerySyntaxError("SELECT names no variables", line_number, offset)
    return tuple(names)


def _term_of(field: str) -> Term:
    if field.startswith("?"):
        name = field[1:]
        if not name:
            raise ValueError("variable name is empty")
        return Var(name)
    return field


def parse_query(text: str) -> Query:
    """Parse the line-oriented query syntax.

    ``REGIME raw|canonical|full`` and ``SELECT ?a ?b`` header lines come
    first; every following non-comment line is a triple pattern in wire
    field syntax with ``?name`` marking variables.
    """
    regime: Regime | None = None
    projection: tuple[str, ...] | None = None
    patterns: list[VarPattern] = []

    for line_number, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        first_word = stripped.split(None, 1)[0]
        if SEPARATOR not in stripped and first_word in ("REGIME", "SELECT"):
            if patterns:
                raise QuerySyntaxError(
                    f"{first_word} header after the first pattern", line_number
                )
            rest = stripped[len(first_word) :].strip()
            if first_word == "REGIME":
                if regime is not None:
                    raise QuerySyntaxError("duplicate REGIME header", line_number)
                try:
                    regime = Regime(rest.lower())
                except ValueError:
                    raise QuerySyntaxError(
                        f"unknown regime {rest!r}; expected raw, canonical, or full",
                        line_number,
                        len(first_word) + 2,
                    ) from None
            else:
                if projection is not None:
                    raise QuerySyntaxError("duplicate SELECT header", line_number)
                projection = _parse_header_vars(
                    rest, line_number, len(line) - len(line.lstrip()) + len(first_word) + 2
                )
            continue

        try:
            parsed = parse_line(line)
        except WireError as exc:
            column = getattr(exc, "column", 1)
            raise QuerySyntaxError(str(exc), line_number, column) from None
        if isinstance(parsed, LineKind):
            continue
        try:
            terms = tuple(_term_of(field) for field in parsed.fields)
        except ValueError as exc:
            raise QuerySyntaxError(str(exc), line_number) from None
        patterns.append(VarPattern(*terms))

    if not patterns:
        raise QuerySyntaxError("query contains no patterns", max(1, text.count("\n") + 1))
    return Query(tuple(patterns), regime or Regime.RAW, projection)


def bindings_as_rows(
    g: Graph, q: Query, bindings: list[Binding]
) -> Iterator[tuple[tuple[str, ...], str]]:
    """Rows of projected texts plus the certainty word, evaluation order."""
    projection = q.projection
    if projection is None:
        projection = tuple(sorted(q.variables()))
    for binding in bindings:
        texts = tuple(g.text_of(binding.assignment[name]) for name in projection)
        yield texts, binding.certainty.value
