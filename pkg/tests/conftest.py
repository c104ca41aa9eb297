"""Shared fixtures: the example corpus, random graph builders, a CLI runner."""

from __future__ import annotations

import io
import random
from pathlib import Path

import pytest

from og import Graph, Triple, parse_document
from og.cli import main as cli_main

FIXTURES = Path(__file__).parent / "fixtures"

CORPUS = FIXTURES / "corpus.ogt"
SPEAKERS_COMPLETE = FIXTURES / "speakers_complete.ogt"
SPEAKERS_INCOMPLETE = FIXTURES / "speakers_incomplete.ogt"


def load_graph(path: Path) -> Graph:
    result = parse_document(path.read_text(encoding="utf-8").splitlines())
    assert not result.errors, result.errors
    g = Graph()
    for fields in result.triples:
        g.add(*fields)
    return g


@pytest.fixture
def corpus_graph() -> Graph:
    return load_graph(CORPUS)


@pytest.fixture
def run_og(capsys, monkeypatch):
    """Run the CLI in process; returns (exit_code, stdout, stderr)."""

    def run(*argv: str, stdin: str | None = None):
        if stdin is not None:
            monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
        code = cli_main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run


# ---------------------------------------------------------------------------
# Random structure builders (deterministic under a seeded Random)
# ---------------------------------------------------------------------------


def random_plain_graph(rng: random.Random, n_texts: int, n_triples: int) -> Graph:
    """Random triples over a small text universe; no semantic structure."""
    g = Graph()
    ids = [g.intern(f"node {i}") for i in range(n_texts)]
    for _ in range(n_triples):
        g.assert_triple(Triple(rng.choice(ids), rng.choice(ids), rng.choice(ids)))
    return g


def random_identity_graph(
    rng: random.Random,
    n_entities: int = 20,
    n_abstracts: int = 6,
    n_relations: int = 5,
    n_facts: int = 60,
    n_type_edges: int = 25,
    n_classes: int = 8,
    n_sub_edges: int = 6,
) -> Graph:
    """A graph with well-formed abstraction, type, and relation hierarchy.

    Abstract targets carry the Abstract label and have no outgoing
    abstract edges, so canonicalization is clean by construction.
    """
    g = Graph()
    abstracts = [g.intern(f"canon {i}") for i in range(n_abstracts)]
    for a in abstracts:
        g.add(g.text_of(a), "text label", "Abstract")
    entities = [g.intern(f"entity {i}") for i in range(n_entities)]
    for e in entities:
        if rng.random() < 0.5:
            g.add(g.text_of(e), "abstract to", g.text_of(rng.choice(abstracts)))
    relations = [g.intern(f"rel {i}") for i in range(n_relations)]
    for _ in range(n_sub_edges):
        a, b = rng.sample(relations, 2)
        g.add(g.text_of(a), "sub-relation of", g.text_of(b))
    classes = [g.intern(f"class {i}") for i in range(n_classes)]
    nodes = entities + abstracts
    for _ in range(n_type_edges):
        subject = rng.choice(nodes + classes)
        g.add(g.text_of(subject), "type", g.text_of(rng.choice(classes)))
    for _ in range(n_facts):
        g.add(
            g.text_of(rng.choice(nodes)),
            g.text_of(rng.choice(relations)),
            g.text_of(rng.choice(nodes)),
        )
    return g


# ---------------------------------------------------------------------------
# Independent closure oracles
# ---------------------------------------------------------------------------


def warshall_closure(nodes: list[int], edges: dict[int, set[int]]) -> dict[int, set[int]]:
    """Transitive closure by repeated row absorption over bitsets."""
    position = {node: i for i, node in enumerate(nodes)}
    rows = [0] * len(nodes)
    for source, targets in edges.items():
        for target in targets:
            rows[position[source]] |= 1 << position[target]
    for k in range(len(nodes)):
        bit = 1 << k
        for i in range(len(nodes)):
            if rows[i] & bit:
                rows[i] |= rows[k]
    return {
        node: {nodes[j] for j in range(len(nodes)) if rows[position[node]] >> j & 1}
        for node in nodes
    }


def bfs_reachable(start: int, edges: dict[int, set[int]]) -> set[int]:
    seen: set[int] = set()
    frontier = list(edges.get(start, ()))
    while frontier:
        node = frontier.pop()
        if node not in seen:
            seen.add(node)
            frontier.extend(edges.get(node, ()))
    return seen


# ---------------------------------------------------------------------------
# Brute-force query oracle: a plain nested-loop join over each pattern's
# full answer list, no reordering, no early substitution.
# ---------------------------------------------------------------------------


def oracle_bindings(g, q) -> set[tuple[tuple[str, int], ...]]:
    from og import Pattern, Regime, Var
    from og.semantics import canonical_map, infer_match

    mapping = canonical_map(g) if q.regime is not Regime.RAW else {}

    def value_of(position: int, obj: int) -> int:
        if q.regime is not Regime.RAW and position in (0, 2):
            return mapping.get(obj, obj)
        return obj

    answer_lists = []
    for pattern in q.patterns:
        ids = []
        dead = False
        for term in pattern.terms:
            if isinstance(term, Var):
                ids.append(None)
            else:
                obj = g.lookup(term)
                if obj is None:
                    dead = True
                    break
                ids.append(obj)
        answer_lists.append([] if dead else infer_match(g, Pattern(*ids), q.regime))

    partial: list[dict[str, int]] = [{}]
    for pattern, answers in zip(q.patterns, answer_lists):
        grown: list[dict[str, int]] = []
        for assignment in partial:
            for triple in answers:
                candidate = dict(assignment)
                ok = True
                for position, term in enumerate(pattern.terms):
                    if not isinstance(term, Var):
                        continue
                    value = value_of(position, triple[position])
                    if term.name in candidate and candidate[term.name] != value:
                        ok = False
                        break
                    candidate[term.name] = value
                if ok:
                    grown.append(candidate)
        partial = grown
    return {tuple(sorted(d.items())) for d in partial}


def binding_set(bindings) -> set[tuple[tuple[str, int], ...]]:
    return {tuple(sorted(b.assignment.items())) for b in bindings}


def random_query(rng: random.Random, g, n_patterns: int, n_vars: int):
    """A random conjunctive query whose terms mix variables, texts that
    occur in the graph, and occasional absent texts."""
    from og import Query, Var, VarPattern

    present = sorted({g.text_of(obj) for t in g.triples() for obj in t})
    names = [f"v{i}" for i in range(n_vars)]
    patterns = []
    for _ in range(n_patterns):
        terms = []
        for position in range(3):
            roll = rng.random()
            if roll < 0.45:
                terms.append(Var(rng.choice(names)))
            elif roll < 0.93 and present:
                terms.append(rng.choice(present))
            else:
                terms.append("never present text")
        patterns.append(VarPattern(*terms))
    return Query(tuple(patterns))
