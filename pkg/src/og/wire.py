"""The .ogt wire format: one triple per line, fields separated by U+25A1.

Escapes inside fields are ``\\\\`` (backslash), ``\\q`` (literal separator),
``\\n`` (newline), ``\\t`` (tab). Lines whose first character is ``#`` are
comments; blank lines are ignored. Parsing is best effort per line and
never aborts a document over one bad line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .core import (
    LABEL_VALUE_SETS,
    RELATION_ALIASES,
    REL_CLASS_LABEL,
    REL_TYPE,
    OgError,
    normalize_text,
)

SEPARATOR = "□"

_ESCAPES = {"\\": "\\\\", SEPARATOR: "\\q", "\n": "\\n", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", "q": SEPARATOR, "n": "\n", "t": "\t"}


class WireError(OgError):
    """Base class for per-line parse failures."""


class FieldCountError(WireError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(f"expected 3 fields, found {count}")


class EmptyFieldError(WireError):
    def __init__(self, position: str):
        self.position = position
        super().__init__(f"{position} field is empty")


class BadEscapeError(WireError):
    def __init__(self, message: str, column: int):
        self.column = column
        super().__init__(f"{message} (column {column})")


class Utf8Error(OgError):
    """The byte stream does not decode as UTF-8."""


def escape(text: str) -> str:
    """Escape a text for embedding in a single wire-format field."""
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape(text: str) -> str:
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise BadEscapeError("dangling backslash", column=i + 1)
        decoded = _UNESCAPES.get(text[i + 1])
        if decoded is None:
            raise BadEscapeError(f"unknown escape \\{text[i + 1]}", column=i + 1)
        out.append(decoded)
        i += 2
    return "".join(out)


class LineKind(Enum):
    TRIPLE = "triple"
    COMMENT = "comment"
    BLANK = "blank"


@dataclass(frozen=True)
class ParsedTriple:
    """Three normalized field texts plus any alias rewrites applied."""

    head: str
    relation: str
    tail: str
    # (position, written form, canonical form) for each rewritten field
    rewrites: tuple[tuple[str, str, str], ...] = ()

    @property
    def fields(self) -> tuple[str, str, str]:
        return (self.head, self.relation, self.tail)


class Severity(str, Enum):
    ERROR = "Error"
    WARNING = "Warning"


@dataclass(frozen=True)
class Diagnostic:
    line_number: int
    severity: Severity
    code: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line_number}: {self.severity.value} {self.code}: {self.message}"


def parse_line(line: str) -> ParsedTriple | LineKind:
    """Parse one wire line into a triple, COMMENT, or BLANK.

    Fields are unescaped, NFC-normalized, and trimmed; relation aliases
    and case variants of label marker values are rewritten to canonical
    form and recorded in ``rewrites``.

    Raises FieldCountError, EmptyFieldError, or BadEscapeError.
    """
    if line.endswith("\n"):
        line = line[:-1]
    if line.endswith("\r"):
        line = line[:-1]
    if line.startswith("#"):
        return LineKind.COMMENT
    if not normalize_text(line):
        return LineKind.BLANK

    # Escapes never produce a raw separator, so splitting first is safe.
    parts = line.split(SEPARATOR)
    if len(parts) != 3:
        raise FieldCountError(len(parts))

    fields: list[str] = []
    for position, part in zip(("head", "relation", "tail"), parts):
        text = normalize_text(unescape(part))
        if not text:
            raise EmptyFieldError(position)
        fields.append(text)

    rewrites: list[tuple[str, str, str]] = []
    relation = fields[1]
    canonical = RELATION_ALIASES.get(relation)
    if canonical is not None:
        rewrites.append(("relation", relation, canonical))
        relation = canonical

    tail = fields[2]
    allowed = LABEL_VALUE_SETS.get(relation)
    if allowed is not None and tail not in allowed:
        folded = tail.casefold()
        for marker in allowed:
            if marker.casefold() == folded:
                rewrites.append(("tail", tail, marker))
                tail = marker
                break

    return ParsedTriple(fields[0], relation, tail, tuple(rewrites))


def serialize_fields(head: str, relation: str, tail: str) -> str:
    """One wire line for three already-normalized texts.

    A head whose escaped form starts with ``#`` gets one leading space so
    the line cannot be mistaken for a comment; parsing trims it back off.
    """
    first = escape(head)
    if first.startswith("#"):
        first = " " + first
    return f"{first} {SEPARATOR} {escape(relation)} {SEPARATOR} {escape(tail)}"


def serialize_triple(triple, dictionary) -> str:
    """Serialize a stored triple through its dictionary.

    Raises UnknownIdError if any component id is not interned.
    """
    return serialize_fields(
        dictionary.text_of(triple.head),
        dictionary.text_of(triple.relation),
        dictionary.text_of(triple.tail),
    )


def edit_distance_at_most(a: str, b: str, k: int) -> bool:
    """Levenshtein distance between ``a`` and ``b`` is at most ``k``."""
    if a == b:
        return True
    if abs(len(a) - len(b)) > k:
        return False
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
        if min(cur) > k:
            return False
        prev = cur
    return prev[-1] <= k


_NEAR_DUPLICATE_DISTANCE = 2


@dataclass
class DocumentResult:
    triples: list[tuple[str, str, str]] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.WARNING]


def parse_document(lines: Iterable[str]) -> DocumentResult:
    """Parse a whole document, best effort.

    Every rejected line yields exactly one Error diagnostic; alias
    rewrites yield Warnings; class names within edit distance 2 of each
    other yield one NearDuplicateClass warning per pair. Good lines
    always come through, in order.
    """
    result = DocumentResult()
    class_names: dict[str, int] = {}  # name -> first line seen

    for line_number, line in enumerate(lines, 1):
        try:
            parsed = parse_line(line)
        except FieldCountError as exc:
            result.diagnostics.append(
                Diagnostic(line_number, Severity.ERROR, "FieldCount", str(exc))
            )
            continue
        except EmptyFieldError as exc:
            result.diagnostics.append(
                Diagnostic(line_number, Severity.ERROR, "EmptyField", str(exc))
            )
            continue
        except BadEscapeError as exc:
            result.diagnostics.append(
                Diagnostic(line_number, Severity.ERROR, "BadEscape", str(exc))
            )
            continue
        if isinstance(parsed, LineKind):
            continue

        for position, written, canonical in parsed.rewrites:
            result.diagnostics.append(
                Diagnostic(
                    line_number,
                    Severity.WARNING,
                    "AliasNormalized",
                    f"{position} {written!r} rewritten to {canonical!r}",
                )
            )
        result.triples.append(parsed.fields)

        if parsed.relation == REL_TYPE:
            class_names.setdefault(parsed.tail, line_number)
        elif parsed.relation == REL_CLASS_LABEL:
            class_names.setdefault(parsed.head, line_number)

    ordered = sorted(class_names, key=class_names.__getitem__)
    for i, first in enumerate(ordered):
        for second in ordered[i + 1 :]:
            if edit_distance_at_most(first, second, _NEAR_DUPLICATE_DISTANCE):
                result.diagnostics.append(
                    Diagnostic(
                        class_names[second],
                        Severity.WARNING,
                        "NearDuplicateClass",
                        f"class names {first!r} and {second!r} differ by "
                        f"{_NEAR_DUPLICATE_DISTANCE} edits or fewer",
                    )
                )
    return result


def parse_bytes(data: bytes) -> DocumentResult:
    """Decode UTF-8 and parse. Raises Utf8Error on undecodable input."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise Utf8Error(f"input is not valid UTF-8: {exc}") from exc
    return parse_document(text.splitlines())
