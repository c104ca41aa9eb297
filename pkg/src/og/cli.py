"""Command-line front end over a persisted store directory.

Data goes to stdout, reports and diagnostics to stderr, so pipelines
compose. Exit codes are stable: 0 success, 1 user or content error,
2 environment or I/O error. Only ``import`` and ``reify`` mutate the
store; every other verb leaves the snapshot and log byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import wire
from .core import (
    ABSTRACT,
    COMPLETE,
    REL_ABSTRACT_TO,
    REL_CLASS_LABEL,
    REL_FORMAT_LABEL,
    REL_SUB_RELATION,
    REL_TEXT_LABEL,
    REL_TYPE,
    OgError,
)
from .query import QuerySyntaxError, bindings_as_rows, evaluate, parse_query
from .semantics import (
    Regime,
    canonical_map,
    canonicalize,
    has_label_triple,
    reify,
    subrelation_closure,
    validate,
)
from .store import Graph, Pattern, Triple, snapshot_header
from .storedir import Store, StoreLockedError
from .wire import Severity

STORE_ENV_VAR = "OG_STORE"


class UsageError(OgError):
    pass


def _report(message: str) -> None:
    print(message, file=sys.stderr)


def _resolve_store(args: argparse.Namespace) -> Store:
    root = args.store or os.environ.get(STORE_ENV_VAR)
    if not root:
        raise UsageError(
            f"no store directory: pass --store or set {STORE_ENV_VAR}"
        )
    return Store(root)


def _open_for_read(args: argparse.Namespace) -> Graph:
    store = _resolve_store(args)
    g = store.open()
    for diagnostic in store.load_diagnostics:
        _report(f"{store.log_path}: {diagnostic}")
    return g


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_import(args: argparse.Namespace) -> int:
    store = _resolve_store(args)
    documents: list[wire.DocumentResult] = []
    errors = warnings = 0
    for name in args.files:
        result = wire.parse_bytes(Path(name).read_bytes())
        documents.append(result)
        for diagnostic in result.diagnostics:
            _report(f"{name}:{diagnostic}")
        errors += len(result.errors)
        warnings += len(result.warnings)

    if args.strict and errors:
        _report(f"strict mode: {errors} error(s), nothing imported")
        return 1

    inserted = duplicates = 0
    with store.write_lock():
        g = store.open()
        for document in documents:
            for head, relation, tail in document.triples:
                if g.add(head, relation, tail):
                    inserted += 1
                else:
                    duplicates += 1
        store.commit()
    _report(
        f"inserted {inserted}, duplicates {duplicates}, "
        f"warnings {warnings}, errors {errors}"
    )
    return 0


def export_text_triples(
    g: Graph, regime: Regime, canonicalized: bool
) -> set[tuple[str, str, str]]:
    """The exported view of the graph as text triples.

    The full regime materializes every super-relation of each stored
    triple. Canonical endpoint rewriting (the canonical regime or the
    --canonicalized flag) replaces heads and tails by their canonical
    objects, leaving the identity and label triples themselves intact so
    the rewritten corpus still declares its own abstraction structure.
    """
    mapping = canonical_map(g)
    rewrite = canonicalized or regime is not Regime.RAW
    preserved = {
        g.lookup(text)
        for text in (REL_ABSTRACT_TO, REL_TEXT_LABEL, REL_FORMAT_LABEL, REL_CLASS_LABEL)
    }

    out: set[tuple[str, str, str]] = set()
    for t in g.triples():
        if regime is Regime.FULL:
            relations = subrelation_closure(g, t.relation)
        else:
            relations = {t.relation}
        for relation in relations:
            head, tail = t.head, t.tail
            if rewrite and relation not in preserved:
                head = mapping.get(head, head)
                tail = mapping.get(tail, tail)
            out.add((g.text_of(head), g.text_of(relation), g.text_of(tail)))
    return out


def cmd_export(args: argparse.Namespace) -> int:
    g = _open_for_read(args)
    regime = Regime(args.regime) if args.regime else Regime.RAW
    triples = export_text_triples(g, regime, args.canonicalized)
    lines = sorted(wire.serialize_fields(*fields) for fields in triples)
    body = "".join(line + "\n" for line in lines)
    sys.stdout.write(snapshot_header(len(lines), body) + "\n")
    sys.stdout.write(body)
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    if args.query_file:
        text = Path(args.query_file).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    try:
        q = parse_query(text)
    except QuerySyntaxError as exc:
        _report(f"query:{exc}")
        return 1
    if args.regime:
        q = q.with_regime(Regime(args.regime))
    g = _open_for_read(args)
    bindings = evaluate(g, q)
    for texts, certainty in bindings_as_rows(g, q, bindings):
        print("\t".join(wire.escape(text) for text in texts) + "\t" + certainty)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    g = _open_for_read(args)
    findings = validate(g)
    for finding in findings:
        print(finding)
    return 1 if any(f.severity is Severity.ERROR for f in findings) else 0


def cmd_stats(args: argparse.Namespace) -> int:
    g = _open_for_read(args)
    type_id = g.lookup(REL_TYPE)
    class_label_id = g.lookup(REL_CLASS_LABEL)
    text_label_id = g.lookup(REL_TEXT_LABEL)
    abstract_id = g.lookup(ABSTRACT)
    sub_relation_id = g.lookup(REL_SUB_RELATION)

    objects = {obj for t in g.triples() for obj in t}
    classes = {t.tail for t in g.match(Pattern(relation=type_id))}
    classes |= {t.head for t in g.match(Pattern(relation=class_label_id))}
    complete = {c for c in classes if has_label_triple(g, c, REL_CLASS_LABEL, COMPLETE)}
    abstract_objects = {
        t.head for t in g.match(Pattern(relation=text_label_id, tail=abstract_id))
    }
    position_sets = [
        {t.head for t in g.match(Pattern(relation=g.lookup(text)))}
        for text in ("subject", "relation", "object")
    ]
    events = set.intersection(*position_sets)
    sub_relations = {t.head for t in g.match(Pattern(relation=sub_relation_id))}

    for key, value in (
        ("objects", len(objects)),
        ("triples", len(g)),
        ("classes", len(classes)),
        ("complete-classes", len(complete)),
        ("abstract-objects", len(abstract_objects)),
        ("events", len(events)),
        ("relations-with-super-relations", len(sub_relations)),
    ):
        print(f"{key}: {value}")
    return 0


def cmd_reify(args: argparse.Namespace) -> int:
    store = _resolve_store(args)
    with store.write_lock():
        g = store.open()
        ids = tuple(g.lookup(text) for text in (args.head, args.relation, args.tail))
        if any(obj is None for obj in ids) or Triple(*ids) not in g:  # type: ignore[arg-type]
            _report("base triple is not asserted in the store")
            return 1
        reification = reify(g, Triple(*ids), args.name)  # type: ignore[arg-type]
        store.commit()
    print(wire.escape(g.text_of(reification.event)))
    return 0


def cmd_canonicalize(args: argparse.Namespace) -> int:
    g = _open_for_read(args)
    obj = g.lookup(args.text)
    if obj is None:
        _report(f"text is not present in the store: {args.text!r}")
        return 1
    print(wire.escape(g.text_of(canonicalize(g, obj))))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--store",
        metavar="DIR",
        default=None,
        help=f"store directory (default: ${STORE_ENV_VAR})",
    )
    common.add_argument(
        "--regime",
        choices=[r.value for r in Regime],
        default=None,
        help="inference regime for query and export",
    )

    parser = argparse.ArgumentParser(
        prog="og", description="text-native knowledge graph store"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", parents=[common], help="import .ogt files")
    p.add_argument("files", nargs="+", metavar="FILE")
    p.add_argument(
        "--strict",
        action="store_true",
        help="refuse the whole import if any line has an error",
    )
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("export", parents=[common], help="dump the graph as .ogt")
    p.add_argument(
        "--canonicalized",
        action="store_true",
        help="replace heads and tails by their canonical objects",
    )
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("query", parents=[common], help="run a query file or stdin")
    p.add_argument("query_file", nargs="?", metavar="FILE", default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("validate", parents=[common], help="report structural findings")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", parents=[common], help="print graph counts")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("reify", parents=[common], help="promote a triple to an event")
    p.add_argument("head")
    p.add_argument("relation")
    p.add_argument("tail")
    p.add_argument("--name", default=None, help="event name (default: the three texts)")
    p.set_defaults(func=cmd_reify)

    p = sub.add_parser("canonicalize", parents=[common], help="print a text's canonical form")
    p.add_argument("text")
    p.set_defaults(func=cmd_canonicalize)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StoreLockedError as exc:
        _report(f"og: {exc}")
        return 2
    except OSError as exc:
        _report(f"og: {exc}")
        return 2
    except OgError as exc:
        _report(f"og: {exc}")
        return 1


def run() -> None:
    raise SystemExit(main())
