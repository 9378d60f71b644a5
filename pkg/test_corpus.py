"""
Acceptance checks over the bundled corpus
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from execution.accuracy import measure_accuracy
from execution.interpreter import Interpreter
from execution.overhead import measure_overhead
from execution.txsuite import check_expectation
from execution.vm import VirtualMachine
from mapgen.faults import OPERATORS
from model.provenance import Confidence
from model.table import MappingTable
from optimizer.config import PassConfig
from pipeline.artifact import CompiledArtifact
from pipeline.bench import detect_faults, validate_compilation
from pipeline.compiler import compile_sources
from pipeline.corpus import load_corpus

CORPUS = Path(__file__).parent / "corpus"

FIXTURES = load_corpus(CORPUS)
BY_NAME = {f.name: f for f in FIXTURES}

MATRIX = {
    "no_opt": [],
    "const_fold": ["const_fold"],
    "dce": ["dce"],
    "reorder": ["reorder"],
    "cfg_restructure": ["cfg_restructure"],
    "default": None,
}


def config_for(passes):
    return PassConfig.default() if passes is None else PassConfig.default(passes=passes)


@pytest.fixture(scope="module")
def accuracy():
    """name -> (identity report, optimized report)"""
    out = {}
    for fixture in FIXTURES:
        txs = fixture.txs()
        plain = measure_accuracy(compile_sources(fixture.files, PassConfig.none()), txs, fixture.name,
                                 fixture.category)
        optimized = measure_accuracy(compile_sources(fixture.files, PassConfig.default()), txs, fixture.name,
                                     fixture.category)
        out[fixture.name] = (plain, optimized)
    return out


def test_corpus_shape():
    assert len(FIXTURES) >= 20
    assert all(f.category for f in FIXTURES)
    assert len({f.category for f in FIXTURES}) >= 8
    assert all(f.suite.exists() and f.txs() for f in FIXTURES)


def test_load_corpus_rejects_missing_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "absent")


# --- accuracy ---

@pytest.mark.parametrize("name", sorted(BY_NAME))
def test_identity_pipeline_is_exact(accuracy, name):
    plain, _ = accuracy[name]
    assert plain.mapped > 0
    assert plain.accuracy == 100.0
    assert plain.discrepancies == []


@pytest.mark.parametrize("name", sorted(BY_NAME))
def test_optimized_fixture_accuracy(accuracy, name):
    _, optimized = accuracy[name]
    assert optimized.accuracy >= 90.0
    assert optimized.discrepancies == []


def test_optimized_aggregate_accuracy(accuracy):
    matched = sum(opt.matched for _, opt in accuracy.values())
    mapped = sum(opt.mapped for _, opt in accuracy.values())
    assert 100.0 * matched / mapped >= 96.0


# --- validators and twin execution across pass configurations ---

@pytest.mark.parametrize("passes", list(MATRIX.values()), ids=list(MATRIX))
@pytest.mark.parametrize("name", sorted(BY_NAME))
def test_matrix_cell(name, passes):
    fixture = BY_NAME[name]
    comp = compile_sources(fixture.files, config_for(passes))
    report = validate_compilation(comp)
    assert report.ok, report.to_dict()

    interpreter = Interpreter(comp.unit)
    vm = VirtualMachine(comp.program)
    src_state, vm_state = interpreter.initial_storage(), vm.initial_storage()
    for tx in fixture.txs():
        src, _, src_state = interpreter.execute(tx, src_state)
        res, _, vm_state = vm.execute(tx, vm_state)
        assert src == res
        assert check_expectation(res, tx.expect) == []


@pytest.mark.parametrize("name", ["zkvoting", "storage_vault", "nested_loops"])
def test_artifacts_are_reproducible(name):
    fixture = BY_NAME[name]
    first = CompiledArtifact.from_compilation(compile_sources(fixture.files, PassConfig.default())).dumps()
    second = CompiledArtifact.from_compilation(compile_sources(fixture.files, PassConfig.default())).dumps()
    assert first == second


# --- fault detection ---

@pytest.mark.parametrize("operator", sorted(OPERATORS))
@pytest.mark.parametrize("name", ["zkvoting", "control_search", "stacked_modifiers"])
def test_every_fault_is_detected(name, operator):
    comp = compile_sources(BY_NAME[name].files, PassConfig.default())
    result = detect_faults(comp, operator, trials=20, seed=3)
    assert result.trials == 20
    assert result.detected == result.trials


@pytest.mark.parametrize("name", sorted(BY_NAME))
def test_mapping_does_not_change_bytecode(name):
    files = BY_NAME[name].files
    on = compile_sources(files, PassConfig.default())
    off = compile_sources(files, PassConfig.default(mapping_enabled=False))
    assert on.program.code == off.program.code


# --- accuracy responds to corrupted mappings ---

def repointed(comp, fraction, rng):
    """A copy of the compilation whose table sends `fraction` of its entries to some other statement"""
    registry = comp.unit.registry
    statements = registry.statement_ids
    entries = list(comp.table.entries)
    for n in rng.choice(len(entries), size=round(fraction * len(entries)), replace=False):
        own = registry.statement_of_span(entries[n].span)
        others = [s for s in statements if s != own]
        entries[n] = replace(entries[n], span=registry.spans[others[int(rng.integers(len(others)))]])
    return replace(comp, table=MappingTable(entries=entries, files=comp.table.files))


@pytest.mark.parametrize("name", ["zkvoting", "checkbit", "sum_loop"])
def test_accuracy_falls_with_corruption(name):
    fixture = BY_NAME[name]
    comp = compile_sources(fixture.files, PassConfig.none())
    txs = fixture.txs()
    rng = np.random.default_rng(11)
    drops = {}
    for percent in (10, 30):
        scores = [measure_accuracy(repointed(comp, percent / 100, rng), txs).accuracy for _ in range(30)]
        drops[percent] = 100.0 - float(np.mean(scores))
        assert drops[percent] >= percent / 2
    assert drops[30] > drops[10]


# --- per-pass bookkeeping ---

@pytest.mark.parametrize("moving_pass", ["reorder", "cfg_restructure"])
@pytest.mark.parametrize("name", sorted(BY_NAME))
def test_layout_passes_keep_spans(name, moving_pass):
    files = BY_NAME[name].files
    without = compile_sources(files, PassConfig.default(passes=["inline", "const_fold"]))
    with_pass = compile_sources(files, PassConfig.default(passes=["inline", "const_fold", moving_pass]))
    before = {e.ir_id: e.span for e in without.table}
    after = {e.ir_id: e.span for e in with_pass.table}
    shared = before.keys() & after.keys()
    assert shared
    assert all(before[i] == after[i] for i in shared)
    if moving_pass == "reorder":
        assert before.keys() == after.keys()


@pytest.mark.parametrize("name", sorted(BY_NAME))
def test_pass_counts_are_conserved(name):
    comp = compile_sources(BY_NAME[name].files, PassConfig.default())
    for stats in comp.passes.passes:
        assert stats.created - stats.deleted == stats.instrs_after - stats.instrs_before, stats.name
    for before, after in zip(comp.passes.passes, comp.passes.passes[1:]):
        assert before.instrs_after == after.instrs_before


@pytest.mark.parametrize("name", sorted(BY_NAME))
def test_lowering_maps_every_instruction_exactly(name):
    comp = compile_sources(BY_NAME[name].files, PassConfig.none())
    registry = comp.unit.registry
    for instr in comp.module.instructions():
        if instr.is_phi:
            continue
        assert instr.provenance.confidence == Confidence.EXACT, instr
        assert instr.provenance.statement_id in registry, instr


# --- overhead ---

@pytest.mark.slow
def test_mapping_overhead_stays_below_ceiling():
    sources = [(f.name, f.category, f.files) for f in FIXTURES]
    report = measure_overhead(sources, PassConfig.default(), repetitions=10)
    assert report.all_bytes_identical
    assert report.aggregate < 25.0


def test_overhead_report_shape():
    sources = [(f.name, f.category, f.files) for f in FIXTURES[:3]]
    report = measure_overhead(sources, PassConfig.default(), repetitions=3)
    assert report.all_bytes_identical
    assert len(report.sources) == 3
    assert report.size_aggregate > 0
    assert np.isfinite(report.aggregate)
