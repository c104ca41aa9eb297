"""Deduplicated in-memory triple set with positional indexes and a log.

Three permutation indexes (head-relation-tail, relation-tail-head,
tail-head-relation) stay in lockstep with the triple set; every
effective assert or retract appends one entry to an in-memory log whose
replay from empty reproduces the current set. Persistence is a snapshot
file plus an append-only log of signed entries, both in wire-format
escape discipline.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass
from typing import IO, Callable, Iterable, NamedTuple

from . import wire
from .core import Dictionary, OgError, UnknownIdError
from .wire import Diagnostic, LineKind, Severity


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass(frozen=True)
class Pattern:
    """Triple template; None components match anything."""

    head: int | None = None
    relation: int | None = None
    tail: int | None = None

    @property
    def components(self) -> tuple[int | None, int | None, int | None]:
        return (self.head, self.relation, self.tail)


class LogEntry(NamedTuple):
    seq: int
    op: str  # "+" or "-"
    line: str  # wire-format triple line


# Component order each index stores: a prefix of bound components in this
# order can be resolved without scanning.
INDEX_ORDERS: dict[str, tuple[int, int, int]] = {
    "hrt": (0, 1, 2),
    "rth": (1, 2, 0),
    "thr": (2, 0, 1),
}

_Index = dict[int, dict[int, set[int]]]


class CorruptSnapshotError(OgError):
    """Snapshot header, checksum, or body failed verification."""


class CorruptLogError(OgError):
    """A non-trailing log entry is malformed."""


class Graph:
    """A graph of interned texts and deduplicated triples.

    Reads are safe from any number of threads; mutation requires the
    single-writer contract (the internal lock serializes writers, and
    readers must not overlap a writer).
    """

    def __init__(self, dictionary: Dictionary | None = None):
        self.dictionary = dictionary if dictionary is not None else Dictionary()
        self._triples: set[Triple] = set()
        self._indexes: dict[str, _Index] = {name: {} for name in INDEX_ORDERS}
        self.log: list[LogEntry] = []
        self.version = 0
        self._write_lock = threading.Lock()
        self._derived: dict[str, tuple[int, object]] = {}

    # -- interning passthroughs ------------------------------------------

    def intern(self, raw: str) -> int:
        return self.dictionary.intern(raw)

    def lookup(self, raw: str) -> int | None:
        return self.dictionary.lookup(raw)

    def text_of(self, obj_id: int) -> str:
        return self.dictionary.text_of(obj_id)

    def triple(self, head: str, relation: str, tail: str) -> Triple:
        """Intern three texts and build the triple."""
        return Triple(self.intern(head), self.intern(relation), self.intern(tail))

    def texts_of(self, t: Triple) -> tuple[str, str, str]:
        return (self.text_of(t.head), self.text_of(t.relation), self.text_of(t.tail))

    # -- mutation ---------------------------------------------------------

    def _check_ids(self, t: Triple) -> None:
        for obj_id in t:
            if obj_id not in self.dictionary:
                raise UnknownIdError(f"triple component {obj_id} is not interned")

    def assert_triple(self, t: Triple) -> bool:
        """Insert ``t``; True if inserted, False if already present."""
        self._check_ids(t)
        with self._write_lock:
            if t in self._triples:
                return False
            line = wire.serialize_triple(t, self.dictionary)
            self._triples.add(t)
            for name, order in INDEX_ORDERS.items():
                a, b, c = (t[order[0]], t[order[1]], t[order[2]])
                self._indexes[name].setdefault(a, {}).setdefault(b, set()).add(c)
            self.log.append(LogEntry(len(self.log) + 1, "+", line))
            self.version += 1
            return True

    def retract_triple(self, t: Triple) -> bool:
        """Remove ``t``; True if removed, False if it was not present."""
        with self._write_lock:
            if t not in self._triples:
                return False
            line = wire.serialize_triple(t, self.dictionary)
            self._triples.discard(t)
            for name, order in INDEX_ORDERS.items():
                a, b, c = (t[order[0]], t[order[1]], t[order[2]])
                index = self._indexes[name]
                third = index[a][b]
                third.discard(c)
                if not third:
                    del index[a][b]
                    if not index[a]:
                        del index[a]
            self.log.append(LogEntry(len(self.log) + 1, "-", line))
            self.version += 1
            return True

    def add(self, head: str, relation: str, tail: str) -> bool:
        return self.assert_triple(self.triple(head, relation, tail))

    def remove(self, head: str, relation: str, tail: str) -> bool:
        ids = tuple(self.lookup(text) for text in (head, relation, tail))
        if any(obj_id is None for obj_id in ids):
            return False
        return self.retract_triple(Triple(*ids))  # type: ignore[arg-type]

    # -- matching ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def triples(self) -> Iterable[Triple]:
        return iter(self._triples)

    def text_triples(self) -> set[tuple[str, str, str]]:
        return {self.texts_of(t) for t in self._triples}

    def _choose_index(self, components: tuple[int | None, ...]) -> str:
        best_name = "hrt"
        best_len = -1
        for name, order in INDEX_ORDERS.items():
            prefix = 0
            for position in order:
                if components[position] is None:
                    break
                prefix += 1
            if prefix > best_len:
                best_name, best_len = name, prefix
        return best_name

    def match(self, pattern: Pattern, via: str | None = None) -> list[Triple]:
        """Triples matching ``pattern`` componentwise, deterministically
        ordered by the chosen index's component order.

        ``via`` forces a specific index ("hrt", "rth", "thr"); any index
        can answer any pattern, degenerating to a scan of its entries.
        """
        components = pattern.components
        for obj_id in components:
            if obj_id is not None and obj_id not in self.dictionary:
                raise UnknownIdError(f"pattern component {obj_id} is not interned")
        name = via if via is not None else self._choose_index(components)
        order = INDEX_ORDERS[name]
        index = self._indexes[name]
        want = tuple(components[position] for position in order)

        out: list[Triple] = []
        firsts = [want[0]] if want[0] is not None else sorted(index)
        for a in firsts:
            seconds_map = index.get(a)
            if seconds_map is None:
                continue
            seconds = [want[1]] if want[1] is not None else sorted(seconds_map)
            for b in seconds:
                thirds_set = seconds_map.get(b)
                if thirds_set is None:
                    continue
                if want[2] is not None:
                    thirds = [want[2]] if want[2] in thirds_set else []
                else:
                    thirds = sorted(thirds_set)
                for c in thirds:
                    placed: list[int] = [0, 0, 0]
                    placed[order[0]], placed[order[1]], placed[order[2]] = a, b, c
                    out.append(Triple(*placed))
        return out

    def match_scan(self, pattern: Pattern) -> list[Triple]:
        """Index-free full scan; the oracle twin of match()."""
        h, r, t = pattern.components
        found = [
            triple
            for triple in self._triples
            if (h is None or triple.head == h)
            and (r is None or triple.relation == r)
            and (t is None or triple.tail == t)
        ]
        found.sort()
        return found

    def match_texts(
        self, head: str | None, relation: str | None, tail: str | None
    ) -> list[Triple]:
        """match() with texts; an unknown bound text matches nothing."""
        ids: list[int | None] = []
        for text in (head, relation, tail):
            if text is None:
                ids.append(None)
            else:
                obj_id = self.lookup(text)
                if obj_id is None:
                    return []
                ids.append(obj_id)
        return self.match(Pattern(*ids))

    # -- derived-value cache (keyed by version) ---------------------------

    def cached(self, key: str, build: Callable[[], object]) -> object:
        entry = self._derived.get(key)
        if entry is not None and entry[0] == self.version:
            return entry[1]
        value = build()
        self._derived[key] = (self.version, value)
        return value


# ---------------------------------------------------------------------------
# Persistence: snapshot + append-only log
# ---------------------------------------------------------------------------

SNAPSHOT_VERSION = "v1"
_HEADER_RE = re.compile(r"^#ogsnapshot (\S+) (\d+) ([0-9a-f]{64})$")
_DICT_PREFIX = "#dict "


def snapshot_body_lines(g: Graph) -> list[str]:
    """Dictionary entries in id order, then triple lines sorted."""
    lines = [_DICT_PREFIX + wire.escape(text) for text in g.dictionary.texts()]
    lines.extend(sorted(wire.serialize_triple(t, g.dictionary) for t in g.triples()))
    return lines


def snapshot_header(count: int, body: str) -> str:
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return f"#ogsnapshot {SNAPSHOT_VERSION} {count} {digest}"


def write_snapshot(g: Graph, sink: IO[str]) -> None:
    body = "".join(line + "\n" for line in snapshot_body_lines(g))
    sink.write(snapshot_header(len(g), body) + "\n")
    sink.write(body)


def read_snapshot(source: IO[str]) -> Graph:
    """Load a snapshot, verifying header, checksum, and triple count.

    Raises CorruptSnapshotError on any mismatch.
    """
    content = source.read()
    newline = content.find("\n")
    if newline < 0:
        header_line, body = content, ""
    else:
        header_line, body = content[:newline], content[newline + 1 :]
    header = _HEADER_RE.match(header_line)
    if header is None:
        raise CorruptSnapshotError("missing or malformed snapshot header")
    if header.group(1) != SNAPSHOT_VERSION:
        raise CorruptSnapshotError(f"unsupported snapshot version {header.group(1)}")
    expected_count = int(header.group(2))
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != header.group(3):
        raise CorruptSnapshotError("snapshot checksum mismatch")

    g = Graph()
    count = 0
    for line_number, line in enumerate(body.splitlines(), 2):
        if line.startswith(_DICT_PREFIX):
            try:
                g.intern(wire.unescape(line[len(_DICT_PREFIX) :]))
            except OgError as exc:
                raise CorruptSnapshotError(f"bad dictionary entry: {exc}") from exc
            continue
        try:
            parsed = wire.parse_line(line)
        except wire.WireError as exc:
            raise CorruptSnapshotError(f"line {line_number}: {exc}") from exc
        if isinstance(parsed, LineKind):
            continue
        g.add(*parsed.fields)
        count += 1
    if count != expected_count:
        raise CorruptSnapshotError(
            f"snapshot declares {expected_count} triples, found {count}"
        )
    return g


def log_line(entry: LogEntry) -> str:
    return f"{entry.op} {entry.line}"


def _parse_log_line(line: str) -> tuple[str, tuple[str, str, str]]:
    if len(line) < 2 or line[0] not in "+-" or line[1] != " ":
        raise CorruptLogError(f"malformed log entry {line!r}")
    parsed = wire.parse_line(line[2:])
    if isinstance(parsed, LineKind):
        raise CorruptLogError(f"log entry holds no triple: {line!r}")
    return line[0], parsed.fields


def apply_log(g: Graph, content: str) -> list[Diagnostic]:
    """Apply an append-only log to ``g``.

    A partial trailing entry (no final newline, or unparsable last line)
    is dropped with a TruncatedLog warning; malformed entries anywhere
    else raise CorruptLogError.
    """
    diagnostics: list[Diagnostic] = []
    if not content:
        return diagnostics
    truncated_tail = not content.endswith("\n")
    lines = content.splitlines()
    last = len(lines)
    for line_number, line in enumerate(lines, 1):
        final = line_number == last
        try:
            op, fields = _parse_log_line(line)
        except (CorruptLogError, wire.WireError) as exc:
            if final:
                diagnostics.append(
                    Diagnostic(
                        line_number,
                        Severity.WARNING,
                        "TruncatedLog",
                        f"dropped partial trailing entry: {exc}",
                    )
                )
                return diagnostics
            raise CorruptLogError(f"log line {line_number}: {exc}") from exc
        if final and truncated_tail:
            diagnostics.append(
                Diagnostic(
                    line_number,
                    Severity.WARNING,
                    "TruncatedLog",
                    "dropped partial trailing entry: missing newline",
                )
            )
            return diagnostics
        if op == "+":
            g.add(*fields)
        else:
            g.remove(*fields)
    return diagnostics


def replay_log(entries: Iterable[LogEntry]) -> Graph:
    """Rebuild a graph from scratch by replaying log entries."""
    g = Graph()
    for entry in entries:
        parsed = wire.parse_line(entry.line)
        assert isinstance(parsed, wire.ParsedTriple)
        if entry.op == "+":
            g.add(*parsed.fields)
        else:
            g.remove(*parsed.fields)
    return g
