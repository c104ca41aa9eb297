"""Text objects, interning, and the reserved vocabulary.

Everything in the graph is a text: entities, relations, classes, and
literals alike. Identity is the normalized text itself; integer ids are
dense handles local to one dictionary and carry no meaning across stores.
"""

from __future__ import annotations

import threading
import unicodedata
from typing import Iterator, NamedTuple

# Only ASCII whitespace is trimmed at the ends; interior whitespace and
# non-ASCII spaces (NBSP etc.) are part of the text.
_ASCII_WS = " \t\n\r\v\f"


class OgError(Exception):
    """Base class for all errors raised by this package."""


class EmptyTextError(OgError):
    """A text was empty after normalization."""


class UnknownIdError(OgError):
    """An object id is not present in the dictionary."""


class ConflictingLabelError(OgError):
    """An object carries two distinct values in one label dimension."""

    def __init__(self, obj_text: str, dimension: str, values: set[str]):
        self.obj_text = obj_text
        self.dimension = dimension
        self.values = values
        listed = ", ".join(sorted(values))
        super().__init__(f"{obj_text!r} has conflicting {dimension} values: {listed}")


def normalize_text(raw: str) -> str:
    """Unicode NFC, then trim ASCII whitespace from both ends."""
    return unicodedata.normalize("NFC", raw).strip(_ASCII_WS)


# ---------------------------------------------------------------------------
# Reserved vocabulary
# ---------------------------------------------------------------------------

REL_TYPE = "type"
REL_TEXT_LABEL = "text label"
REL_FORMAT_LABEL = "format label"
REL_CLASS_LABEL = "class label"
REL_ABSTRACT_TO = "abstract to"

REL_SUB_RELATION = "sub-relation of"
REL_SUBJECT = "subject"
REL_RELATION = "relation"
REL_OBJECT = "object"

NAME = "Name"
DESCRIPTION = "Description"
DOCUMENT = "Document"
ABSTRACT = "Abstract"
STRING = "String"
TIME = "Time"
NUMBER = "Number"
COMPLETE = "Complete"
INCOMPLETE = "Incomplete"

RESERVED_RELATIONS = (
    REL_TYPE,
    REL_TEXT_LABEL,
    REL_FORMAT_LABEL,
    REL_CLASS_LABEL,
    REL_ABSTRACT_TO,
)
AUXILIARY_RELATIONS = (REL_SUB_RELATION, REL_SUBJECT, REL_RELATION, REL_OBJECT)

TEXT_LABEL_VALUES = (NAME, DESCRIPTION, DOCUMENT, ABSTRACT)
FORMAT_LABEL_VALUES = (STRING, TIME, NUMBER)
CLASS_LABEL_VALUES = (COMPLETE, INCOMPLETE)
MARKERS = TEXT_LABEL_VALUES + FORMAT_LABEL_VALUES + CLASS_LABEL_VALUES

RESERVED_TEXTS = RESERVED_RELATIONS + AUXILIARY_RELATIONS + MARKERS

# Spellings that occur in real corpora and are rewritten to the canonical
# relation on parse.
RELATION_ALIASES = {
    "text type": REL_TEXT_LABEL,
    "class type": REL_CLASS_LABEL,
}

# Marker values accept case variants ("time", "description") per label
# dimension; the rewrite is applied only in the tail of a label triple.
LABEL_VALUE_SETS = {
    REL_TEXT_LABEL: TEXT_LABEL_VALUES,
    REL_FORMAT_LABEL: FORMAT_LABEL_VALUES,
    REL_CLASS_LABEL: CLASS_LABEL_VALUES,
}

_MARKER_BY_FOLD = {m.casefold(): m for m in MARKERS}


def canonical_reserved(text: str) -> str | None:
    """Canonical reserved form of ``text``, or None if it is not reserved.

    Accepts the canonical texts themselves, relation aliases, and case
    variants of marker values.
    """
    if text in RESERVED_TEXTS:
        return text
    alias = RELATION_ALIASES.get(text)
    if alias is not None:
        return alias
    return _MARKER_BY_FOLD.get(text.casefold())


def is_reserved_text(text: str) -> bool:
    return canonical_reserved(text) is not None


class TextObject(NamedTuple):
    id: int
    text: str


class Dictionary:
    """Injective interning table: equal normalized texts, equal ids.

    The reserved vocabulary is interned at construction, before any user
    text. Interning is internally synchronized; lookups are safe under
    the many-readers-or-one-writer contract shared with the graph.
    """

    def __init__(self) -> None:
        self._text_to_id: dict[str, int] = {}
        self._id_to_text: list[str] = []
        self._lock = threading.Lock()
        for text in RESERVED_TEXTS:
            self.intern(text)

    def intern(self, raw: str) -> int:
        """Return the id of ``raw``'s normalized text, interning if new."""
        text = normalize_text(raw)
        if not text:
            raise EmptyTextError("text is empty after normalization")
        existing = self._text_to_id.get(text)
        if existing is not None:
            return existing
        with self._lock:
            existing = self._text_to_id.get(text)
            if existing is not None:
                return existing
            new_id = len(self._id_to_text)
            self._id_to_text.append(text)
            self._text_to_id[text] = new_id
            return new_id

    def lookup(self, raw: str) -> int | None:
        """Id of an already-interned text, or None. Never interns."""
        return self._text_to_id.get(normalize_text(raw))

    def text_of(self, obj_id: int) -> str:
        if 0 <= obj_id < len(self._id_to_text):
            return self._id_to_text[obj_id]
        raise UnknownIdError(f"unknown object id {obj_id}")

    def object_of(self, obj_id: int) -> TextObject:
        return TextObject(obj_id, self.text_of(obj_id))

    def is_reserved(self, obj_id: int) -> bool:
        return is_reserved_text(self.text_of(obj_id))

    def __len__(self) -> int:
        return len(self._id_to_text)

    def __contains__(self, obj_id: int) -> bool:
        return isinstance(obj_id, int) and 0 <= obj_id < len(self._id_to_text)

    def texts(self) -> Iterator[str]:
        """All interned texts in id order."""
        return iter(self._id_to_text)
