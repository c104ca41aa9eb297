"""Interning, normalization, reserved vocabulary, and label derivation."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from og import (
    ConflictingLabelError,
    Dictionary,
    EmptyTextError,
    Graph,
    LabelSet,
    UnknownIdError,
    canonical_reserved,
    is_reserved_text,
    label_set_of,
    normalize_text,
)
from og.core import MARKERS, RESERVED_TEXTS


class TestIntern:
    def test_idempotent(self):
        d = Dictionary()
        first = d.intern("Albert Einstein")
        assert d.intern("Albert Einstein") == first

    def test_nbsp_and_trailing_space_stay_distinct(self):
        # NFC plus ASCII-only trim: the NBSP variant is its own text.
        d = Dictionary()
        nbsp = d.intern("Albert Einstein ")
        plain = d.intern("Albert Einstein")
        assert nbsp != plain
        assert d.text_of(nbsp) == "Albert Einstein"

    def test_empty_rejected(self):
        d = Dictionary()
        with pytest.raises(EmptyTextError):
            d.intern("")
        with pytest.raises(EmptyTextError):
            d.intern(" \t\n ")

    def test_nfc_equivalence(self):
        d = Dictionary()
        composed = d.intern("café")
        decomposed = d.intern("café")
        assert composed == decomposed

    def test_interior_whitespace_preserved(self):
        d = Dictionary()
        obj = d.intern("  a \t b  ")
        assert d.text_of(obj) == "a \t b"

    def test_lookup_never_interns(self):
        d = Dictionary()
        size = len(d)
        assert d.lookup("never seen") is None
        assert len(d) == size

    def test_unknown_id(self):
        d = Dictionary()
        with pytest.raises(UnknownIdError):
            d.text_of(10_000)

    def test_reserved_preinterned(self):
        d = Dictionary()
        for text in RESERVED_TEXTS:
            assert d.lookup(text) is not None

    @given(st.text(min_size=0, max_size=30))
    def test_intern_bijection(self, raw):
        d = Dictionary()
        normalized = normalize_text(raw)
        if not normalized:
            with pytest.raises(EmptyTextError):
                d.intern(raw)
            return
        obj = d.intern(raw)
        assert d.intern(raw) == obj
        assert d.text_of(obj) == normalized
        other = d.intern(normalized + "x")
        assert other != obj

    @given(st.lists(st.text(min_size=1, max_size=20), max_size=30))
    def test_distinct_texts_distinct_ids(self, raws):
        d = Dictionary()
        by_text = {}
        for raw in raws:
            if not normalize_text(raw):
                continue
            obj = d.intern(raw)
            by_text.setdefault(normalize_text(raw), set()).add(obj)
        ids = [next(iter(v)) for v in by_text.values()]
        assert all(len(v) == 1 for v in by_text.values())
        assert len(ids) == len(set(ids))


class TestReserved:
    def test_core_relations(self):
        assert is_reserved_text("type")
        assert is_reserved_text("abstract to")
        assert not is_reserved_text("Albert Einstein")

    def test_relation_alias(self):
        assert is_reserved_text("text type")
        assert canonical_reserved("text type") == "text label"
        assert canonical_reserved("class type") == "class label"

    def test_marker_case_variants(self):
        assert canonical_reserved("time") == "Time"
        assert canonical_reserved("description") == "Description"
        assert canonical_reserved("COMPLETE") == "Complete"

    def test_closed_elsewhere(self):
        for text in ("typ", "text labels", "sub relation of", "entity", "has father"):
            assert not is_reserved_text(text)

    def test_dictionary_method(self):
        d = Dictionary()
        assert d.is_reserved(d.intern("format label"))
        assert not d.is_reserved(d.intern("1879"))

    def test_every_marker_reserved(self):
        for marker in MARKERS:
            assert is_reserved_text(marker)
            assert is_reserved_text(marker.lower())


class TestLabelSet:
    def test_document_label(self):
        g = Graph()
        quote = "To be, or not to be, that is the question."
        g.add(quote, "text label", "Document")
        labels = label_set_of(g, g.intern(quote))
        assert labels == LabelSet(text_label="Document")

    def test_time_format_label(self):
        g = Graph()
        g.add("1879", "format label", "Time")
        labels = label_set_of(g, g.intern("1879"))
        assert labels.format_label == "Time"
        assert labels.text_label is None

    def test_class_label_defaults_incomplete(self):
        g = Graph()
        g.add("Zhejiang University", "type", "University")
        assert label_set_of(g, g.intern("University")).class_label == "Incomplete"

    def test_no_default_format_label(self):
        g = Graph()
        obj = g.intern("plain text")
        assert label_set_of(g, obj).format_label is None

    def test_conflict_reported(self):
        g = Graph()
        g.add("x", "text label", "Name")
        g.add("x", "text label", "Document")
        with pytest.raises(ConflictingLabelError) as exc:
            label_set_of(g, g.intern("x"))
        assert "Name" in str(exc.value) and "Document" in str(exc.value)

    def test_derivation_is_pure(self):
        # Removing the defining triple reverts the label to its default.
        g = Graph()
        g.add("c", "class label", "Complete")
        obj = g.intern("c")
        assert label_set_of(g, obj).class_label == "Complete"
        g.remove("c", "class label", "Complete")
        assert label_set_of(g, obj).class_label == "Incomplete"

    def test_unrecognized_values_ignored(self):
        g = Graph()
        g.add("x", "text label", "Banner")
        assert label_set_of(g, g.intern("x")).text_label is None
