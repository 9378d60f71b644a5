"""
Test the data model - spans, provenance merging, the table and the compressed codec
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from model.codec import decode_compressed, encode_compressed, encode_stream
from model.errors import DanglingInheritance, MalformedField
from model.provenance import Confidence, Provenance, merge_provenance
from model.span import SourceSpan, SpanRelation, smallest_container, span_relation
from model.table import JumpType, MappingEntry, MappingTable
from model.words import MASK, apply_binop, apply_cmp

spans = st.builds(SourceSpan, st.integers(0, 200), st.integers(1, 60), st.integers(0, 2))


def test_span_relations():
    """Each relation on a hand-picked pair"""
    outer = SourceSpan(10, 20)
    assert span_relation(outer, SourceSpan(10, 20)) == SpanRelation.EQUAL
    assert span_relation(outer, SourceSpan(12, 5)) == SpanRelation.A_CONTAINS_B
    assert span_relation(SourceSpan(12, 5), outer) == SpanRelation.B_CONTAINS_A
    assert span_relation(outer, SourceSpan(25, 10)) == SpanRelation.PARTIAL_OVERLAP
    assert span_relation(outer, SourceSpan(30, 4)) == SpanRelation.DISJOINT
    assert span_relation(outer, SourceSpan(10, 20, 1)) == SpanRelation.DISJOINT


@given(spans, spans)
def test_span_relation_is_antisymmetric(a, b):
    """Swapping the arguments mirrors containment and keeps the symmetric relations"""
    mirror = {
        SpanRelation.A_CONTAINS_B: SpanRelation.B_CONTAINS_A,
        SpanRelation.B_CONTAINS_A: SpanRelation.A_CONTAINS_B,
    }
    forward = span_relation(a, b)
    assert span_relation(b, a) == mirror.get(forward, forward)
    assert (forward == SpanRelation.EQUAL) == (a == b)


def test_span_relation_is_antisymmetric_on_small_spans():
    mirror = {
        SpanRelation.A_CONTAINS_B: SpanRelation.B_CONTAINS_A,
        SpanRelation.B_CONTAINS_A: SpanRelation.A_CONTAINS_B,
    }
    small = [SourceSpan(start, length) for start in range(8) for length in range(8)]
    for a in small:
        for b in small:
            forward = span_relation(a, b)
            assert span_relation(b, a) == mirror.get(forward, forward), (a, b)
            assert (forward == SpanRelation.EQUAL) == (a == b), (a, b)


@given(spans)
def test_span_contains_itself(span):
    assert span.contains(span)
    assert span_relation(span, span) == SpanRelation.EQUAL


def test_span_triple_parsing():
    assert SourceSpan.parse_triple("4:7:1") == SourceSpan(4, 7, 1)
    assert SourceSpan(4, 7, 1).to_triple() == "4:7:1"
    for bad in ("4:0:0", "4:7", "-1:2:0", "a:b:c"):
        with pytest.raises(ValueError):
            SourceSpan.parse_triple(bad)


def test_span_line_col_and_text():
    text = "contract A {\n    uint x;\n}\n"
    span = SourceSpan(17, 7)
    assert span.line_col(text) == (2, 5)
    assert span.text_of(text) == "uint x;"
    assert span.is_valid_for([text])
    assert not SourceSpan(20, 100).is_valid_for([text])
    assert not span.is_valid_for([])


def test_smallest_container_prefers_tightest():
    a, b = SourceSpan(12, 2), SourceSpan(16, 2)
    registered = [SourceSpan(0, 50), SourceSpan(10, 10), SourceSpan(11, 8)]
    assert smallest_container(registered, a, b) == SourceSpan(11, 8)
    assert smallest_container([SourceSpan(0, 5)], a, b) is None


# ---------------------------------------------------------------- provenance

@given(spans, st.sampled_from(list(Confidence)))
def test_merge_is_idempotent(span, confidence):
    p = Provenance(primary_span=span, confidence=confidence)
    assert merge_provenance(p, p) == p


def test_merge_uses_registered_container():
    statement = SourceSpan(0, 30)
    a = Provenance.exact(SourceSpan(2, 3), statement_id=1)
    b = Provenance.exact(SourceSpan(10, 4), statement_id=1)
    merged = merge_provenance(a, b, [statement])
    assert merged.primary_span == statement
    assert merged.confidence == Confidence.EXACT


def test_merge_without_container_keeps_left_and_downgrades():
    a = Provenance.exact(SourceSpan(2, 3))
    b = Provenance.exact(SourceSpan(40, 4))
    merged = merge_provenance(a, b)
    assert merged.primary_span == SourceSpan(2, 3)
    assert merged.confidence == Confidence.APPROXIMATE


def test_merge_with_missing_span_and_chains():
    site = SourceSpan(50, 10)
    a = Provenance.exact(SourceSpan(2, 3)).with_call_site(site)
    b = Provenance.synthetic(zk_constraint=4)
    merged = merge_provenance(a, b)
    assert merged.primary_span == SourceSpan(2, 3)
    assert merged.confidence == Confidence.SYNTHETIC
    assert merged.zk_constraint == 4
    assert merged.inline_chain == ()
    assert not merged.is_mappable


def test_confidence_names():
    assert Confidence.from_name("exact") is Confidence.EXACT
    assert Confidence.from_name("A") is Confidence.APPROXIMATE
    assert Confidence.EXACT > Confidence.APPROXIMATE > Confidence.SYNTHETIC
    with pytest.raises(ValueError):
        Confidence.from_name("certain")


# ---------------------------------------------------------------- table and codec

def _table(*rows):
    return MappingTable(entries=[MappingEntry(SourceSpan(s, l, f), ir_id=i, offset=o, jump=j, modifier_depth=m)
                                 for i, (o, s, l, f, j, m) in enumerate(rows)])


def test_compressed_encoding_omits_repeats():
    table = _table(
        (0, 10, 5, 0, JumpType.REGULAR, 0),
        (2, 10, 5, 0, JumpType.REGULAR, 0),
        (4, 20, 3, 0, JumpType.INTO, 0),
        (9, 20, 3, 0, JumpType.OUT_OF, 1),
    )
    assert encode_compressed(table) == "10:5:0:-:0;;20:3:0:i;:::o:1"


def test_table_lookup():
    table = _table((0, 1, 1, 0, JumpType.REGULAR, 0), (5, 2, 1, 0, JumpType.REGULAR, 0))
    assert table.entry_at(5).span == SourceSpan(2, 1)
    assert table.entry_at(3) is None
    assert table.distinct_spans() == [SourceSpan(1, 1), SourceSpan(2, 1)]


legacy = st.tuples(st.integers(0, 500), st.integers(0, 80), st.integers(0, 3),
                   st.sampled_from(list(JumpType)), st.integers(0, 3))


@settings(max_examples=1000)
@given(st.lists(legacy, max_size=25))
def test_compressed_round_trip(stream):
    assert decode_compressed(encode_stream(stream)) == stream


def test_decode_errors():
    assert decode_compressed("") == []
    with pytest.raises(DanglingInheritance):
        decode_compressed(";1:2:0")
    with pytest.raises(DanglingInheritance):
        decode_compressed("1:2")
    with pytest.raises(MalformedField):
        decode_compressed("a:1:0:-:0")
    with pytest.raises(MalformedField):
        decode_compressed("1:2:0:x:0")
    with pytest.raises(MalformedField):
        decode_compressed("1:2:0:-:0:9")


# ---------------------------------------------------------------- words

def test_word_arithmetic_wraps():
    assert apply_binop("add", MASK, 1) == 0
    assert apply_binop("sub", 0, 1) == MASK
    assert apply_binop("shl", 1, 64) == 0
    assert apply_binop("div", 7, 0) == 0
    assert apply_cmp("le", 3, 3) == 1
    with pytest.raises(ValueError):
        apply_binop("pow", 2, 3)
