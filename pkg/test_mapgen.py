"""
Tests for mapping table construction, queries, validators, fault injection and export
"""

import json
from dataclasses import replace

import pytest

from backend.disasm import instruction_offsets
from mapgen.export import export_table, import_compressed, import_rich
from mapgen.faults import OPERATORS, inject
from mapgen.query import OffsetIndex, query_offset, query_span
from mapgen.validate import bytecode_blocks, validate_structural, validate_syntactic
from model.errors import MalformedField, OffsetOutOfRange
from model.provenance import Confidence
from model.span import SourceSpan, SpanRelation, span_relation
from model.table import JumpType, MappingEntry, MappingTable
from pipeline.artifact import CompiledArtifact
from pipeline.bench import validate_compilation


def entry(start, length, offset, ir_id=0, file=0):
    return MappingEntry(SourceSpan(start, length, file), ir_id, offset)


# --- construction ---

def test_table_is_sorted_and_points_at_instructions(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"))
    offsets = comp.table.offsets
    assert offsets == sorted(set(offsets))
    starts = set(instruction_offsets(comp.program.code))
    assert set(offsets) <= starts
    ids = comp.module.instruction_index()
    assert all(e.ir_id in ids for e in comp.table)


def test_every_logged_instruction_is_counted(compile_text, fixture_source):
    comp = compile_text(fixture_source("checkbit"))
    assert len(comp.table) + comp.table.synthetic_excluded == len(comp.log)
    assert comp.table.synthetic_excluded >= comp.log.dispatch_records


def test_entries_carry_instruction_metadata(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"), [])
    index = comp.module.instruction_index()
    for e in comp.table:
        instr = index[e.ir_id]
        assert e.span == instr.provenance.primary_span
        assert e.modifier_depth == instr.modifier_depth
        assert e.zk_constraint == instr.provenance.zk_constraint
    assert {e.jump for e in comp.table} == {JumpType.REGULAR, JumpType.INTO, JumpType.OUT_OF}


# --- queries ---

def test_query_inside_an_immediate(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"))
    push = next(r for r in comp.log if r.mnemonic == "PUSH" and comp.table.entry_at(r.offset) is not None)
    found = query_offset(comp.table, push.offset + 3, comp.program.code)
    assert found == comp.table.entry_at(push.offset)


def test_query_out_of_range(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"))
    code = comp.program.code
    for offset in (-1, len(code)):
        with pytest.raises(OffsetOutOfRange):
            query_offset(comp.table, offset, code)


def test_dispatch_code_is_unmapped(compile_text, fixture_source):
    comp = compile_text(fixture_source("checkbit"))
    stub = comp.program.function_table["BitCheck.checkBit/1"]
    assert query_offset(comp.table, stub, comp.program.code) is None


def test_offset_index_covering():
    index = OffsetIndex(b"\x60" + bytes(8) + b"\x01")
    assert index.covering(0) == 0
    assert index.covering(8) == 0
    assert index.covering(9) == 9


def test_query_span_finds_require(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"), [])
    text = comp.unit.file_texts[0]
    start = text.encode("utf-8").index(b'require(!hasVoted')
    require = next(e.span for e in comp.table if e.span.start == start)
    offsets = query_span(comp.table, require)
    assert offsets
    for offset in offsets:
        relation = span_relation(comp.table.entry_at(offset).span, require)
        assert relation != SpanRelation.DISJOINT and relation != SpanRelation.PARTIAL_OVERLAP


def test_query_span_outside_code(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"))
    assert query_span(comp.table, SourceSpan(0, 2)) == []


# --- validators ---

@pytest.mark.parametrize("name", ["zkvoting", "checkbit", "only_owner", "stacked_modifiers", "nested_loops",
                                  "reentrancy_guard", "control_search", "event_transfer"])
@pytest.mark.parametrize("passes", [None, []])
def test_honest_tables_validate(compile_text, fixture_source, name, passes):
    comp = compile_text(fixture_source(name), passes)
    report = validate_compilation(comp)
    assert report.ok, report.to_dict()
    assert report.checked == len(comp.table)


def test_syntactic_order_and_uniqueness():
    table = MappingTable(entries=[entry(0, 5, 4), entry(0, 5, 4), entry(0, 5, 2)], files=["a"])
    checks = validate_syntactic(table).by_check()
    assert checks == {"uniqueness": 1, "order": 1}


def test_syntactic_partial_overlap():
    table = MappingTable(entries=[entry(0, 5, 0), entry(3, 5, 1), entry(1, 2, 2)], files=["a"])
    report = validate_syntactic(table)
    assert report.by_check() == {"overlap": 1}


def test_syntactic_bounds():
    table = MappingTable(entries=[entry(0, 5, 0), entry(8, 5, 1)], files=["a"])
    report = validate_syntactic(table, ["0123456789"])
    assert report.by_check() == {"bounds": 1}
    assert report.violations[0].entries[0].offset == 1


def test_structural_call_pairing(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"), [])
    stripped = MappingTable(entries=[e for e in comp.table if e.jump != JumpType.OUT_OF], files=comp.table.files)
    report = validate_structural(stripped, comp.unit.registry, comp.module, comp.program)
    assert "call_pairing" in report.by_check()


def test_structural_control_flow_is_forward_only(compile_text):
    comp = compile_text("contract S { uint a; uint b; function f(uint x) { a = x + 1; b = x + 2; } }", [])
    registry = comp.unit.registry
    text = comp.unit.file_texts[0]
    honest = validate_structural(comp.table, registry, comp.module, comp.program)
    assert "control_flow" not in honest.by_check()

    first, second = (next(s for s, span in registry.spans.items() if span.text_of(text) == stmt)
                     for stmt in ("a = x + 1;", "b = x + 2;"))
    swap = {first: registry.spans[second], second: registry.spans[first]}
    entries = []
    for e in comp.table:
        stmt = registry.statement_of_span(e.span)
        entries.append(replace(e, span=swap[stmt]) if stmt in swap else e)
    swapped = MappingTable(entries=entries, files=comp.table.files)
    report = validate_structural(swapped, registry, comp.module, comp.program)
    assert "control_flow" in report.by_check()


def test_bytecode_blocks_split_at_jumpdest():
    code = bytes([0x5b, 0x01, 0x56, 0x01, 0x5b, 0x01])
    blocks = bytecode_blocks(code)
    assert blocks[0] == blocks[1] == blocks[2]
    assert blocks[3] != blocks[2]
    assert blocks[4] != blocks[3]
    assert blocks[5] == blocks[4]


# --- fault injection ---

@pytest.mark.parametrize("operator", sorted(OPERATORS))
@pytest.mark.parametrize("seed", [0, 1, 7])
def test_faults_are_detected(compile_text, fixture_source, operator, seed):
    comp = compile_text(fixture_source("zkvoting"))
    mutated = inject(comp.table, operator, seed, registered=comp.unit.registry.registered_spans(),
                     next_id=comp.module.next_id)
    assert mutated.entries != comp.table.entries
    assert not validate_compilation(comp, mutated).ok


def test_injection_leaves_the_original_alone(compile_text, fixture_source):
    comp = compile_text(fixture_source("checkbit"))
    before = list(comp.table.entries)
    inject(comp.table, "span_swap", 3)
    assert comp.table.entries == before


def test_injection_is_seeded(compile_text, fixture_source):
    comp = compile_text(fixture_source("checkbit"))
    assert inject(comp.table, "span_shift", 11).entries == inject(comp.table, "span_shift", 11).entries


def test_injection_errors():
    with pytest.raises(ValueError, match="empty"):
        inject(MappingTable(), "span_shift", 0)
    with pytest.raises(ValueError, match="Unknown"):
        inject(MappingTable(entries=[entry(0, 1, 0)]), "flip_bits", 0)


# --- export ---

def test_rich_export_round_trip(compile_text, fixture_source):
    comp = compile_text(fixture_source("stacked_modifiers"))
    text = export_table(comp.table, indent=2)
    back = import_rich(text)
    assert back.entries == comp.table.entries
    assert back.files == comp.table.files
    assert back.synthetic_excluded == comp.table.synthetic_excluded


def test_rich_fields():
    table = MappingTable(entries=[MappingEntry(SourceSpan(3, 4, 0), 9, 12, JumpType.INTO, 1, 2,
                                               Confidence.APPROXIMATE)], files=["a.msol"])
    document = json.loads(export_table(table))
    assert document["entries"] == [{"s": 3, "l": 4, "f": 0, "ir_id": 9, "offset": 12, "jump": "i",
                                    "modifier_depth": 1, "zk_constraint": 2, "confidence": "approximate"}]


def test_empty_table_exports_empty_list():
    assert export_table(MappingTable()) == "[]"
    assert export_table(MappingTable(), "compressed") == ""
    assert import_rich("[]").entries == []


def test_empty_export_drops_file_list_and_exclusions():
    table = MappingTable(files=["a.msol"], synthetic_excluded=3)
    assert export_table(table) == "[]"
    back = import_rich(export_table(table))
    assert back.files == []
    assert back.synthetic_excluded == 0


def test_unmapped_artifact_keeps_its_file_list(compile_text, fixture_source):
    comp = compile_text(fixture_source("checkbit"), mapping_enabled=False)
    assert len(comp.table) == 0
    loaded = CompiledArtifact.loads(CompiledArtifact.from_compilation(comp).dumps())
    assert loaded.table.entries == []
    assert loaded.table.files == comp.unit.file_names


def test_compressed_export_matches_legacy_stream(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"))
    text = export_table(comp.table, "compressed")
    assert import_compressed(text) == comp.table.legacy_stream()


@pytest.mark.parametrize("text", ["{", '{"entries": [{"s": 1}]}', '"table"',
                                  '[{"s": 0, "l": 1, "f": 0, "ir_id": 0, "offset": 0, "jump": "x", '
                                  '"modifier_depth": 0, "zk_constraint": null, "confidence": "exact"}]'])
def test_malformed_rich_input(text):
    with pytest.raises(MalformedField):
        import_rich(text)


def test_unknown_format():
    with pytest.raises(ValueError):
        export_table(MappingTable(), "yaml")
