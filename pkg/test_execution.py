"""
Tests for the bytecode VM, the source interpreter, trace reconstruction and the accuracy oracle
"""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from execution.accuracy import align, lcs_matches, measure_accuracy
from execution.interpreter import Interpreter
from execution.overhead import measure_source
from execution.state import (CALL_DEPTH_LIMIT, REVERTED, RETURNED, ExecResult, TxInput, parse_storage_name,
                             resolve_function_key)
from execution.trace import collapse, reconstruct_trace
from execution.txsuite import check_expectation, load_suite
from execution.vm import VirtualMachine
from model.errors import CallDepthLimit, MalformedField, StepLimit
from optimizer.config import PassConfig
from pipeline.artifact import CompiledArtifact


def run_suite(comp, txs):
    """Both engines over a suite with carried storage; returns [(interpreter, vm)] results"""
    interpreter = Interpreter(comp.unit)
    vm = VirtualMachine(comp.program)
    src_state, vm_state = interpreter.initial_storage(), vm.initial_storage()
    out = []
    for tx in txs:
        src, _, src_state = interpreter.execute(tx, src_state)
        res, _, vm_state = vm.execute(tx, vm_state)
        out.append((src, res))
    return out


# --- twin execution ---

@pytest.mark.parametrize("name", ["zkvoting", "zkvoting_strict", "misc_math", "event_transfer", "only_owner",
                                  "reentrancy_guard", "overload_add", "nested_loops"])
@pytest.mark.parametrize("passes", [None, []])
def test_engines_agree_and_meet_expectations(compile_text, fixture_source, corpus_dir, name, passes):
    comp = compile_text(fixture_source(name), passes)
    txs = load_suite(corpus_dir / f"{name}.txs.json")
    for tx, (src, res) in zip(txs, run_suite(comp, txs)):
        assert src == res
        assert check_expectation(res, tx.expect) == []


def test_revert_rolls_back(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting_strict"))
    vm = VirtualMachine(comp.program)
    first, _, state = vm.execute(TxInput("submitVote", [3], sender=100))
    assert first.status == RETURNED
    second, _, after = vm.execute(TxInput("submitVote", [5], sender=100), state)
    assert second.status == REVERTED
    assert second.revert_message == "Already voted"
    assert after == state
    assert second.storage == first.storage
    assert second.events == []


def test_events_are_recorded(compile_text, fixture_source):
    comp = compile_text(fixture_source("event_transfer"))
    result, _, _ = VirtualMachine(comp.program).execute(TxInput("mint", [50], sender=100))
    assert result.events == [("Mint", (100, 50))]


def test_initial_storage_from_declarations(compile_text, fixture_source):
    comp = compile_text(fixture_source("misc_math"))
    assert VirtualMachine(comp.program).initial_storage() == {0: 1}
    assert Interpreter(comp.unit).initial_storage() == {0: 1}


def test_storage_override(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"))
    tx = TxInput("submitVote", [1], sender=5, storage={"hasVoted[5]": 1})
    src, _, _ = Interpreter(comp.unit).execute(tx)
    res, _, _ = VirtualMachine(comp.program).execute(tx)
    assert src == res
    assert res.revert_message == "Already voted"


SPIN = "contract Spin { uint n; function spin() { while (true) { n = n + 1; } } }"


def test_vm_step_limit(compile_text):
    comp = compile_text(SPIN, [])
    with pytest.raises(StepLimit):
        VirtualMachine(comp.program, step_limit=500).execute(TxInput("spin"))


def test_interpreter_step_limit(compile_text):
    comp = compile_text(SPIN, [])
    with pytest.raises(StepLimit):
        Interpreter(comp.unit, step_limit=500).execute(TxInput("spin"))


DEEP = """
contract Deep {
    function depth(uint n) returns (uint) {
        if (n == 0) { return 0; }
        return depth(n - 1) + 1;
    }

    function down(uint n) internal returns (uint) {
        if (n == 0) { return 0; }
        return down(n - 1) + 1;
    }

    function direct(uint n) external returns (uint) {
        return down(n);
    }

    function viaHelper(uint n) returns (uint) {
        return depth(n);
    }
}
"""


@pytest.mark.parametrize("passes", [None, []])
@pytest.mark.parametrize("function, n", [("depth", 300), ("direct", 300), ("viaHelper", 300),
                                         ("depth", CALL_DEPTH_LIMIT - 1), ("direct", CALL_DEPTH_LIMIT - 1),
                                         ("viaHelper", CALL_DEPTH_LIMIT - 1)])
def test_deep_recursion_agrees(compile_text, passes, function, n):
    comp = compile_text(DEEP, passes)
    src, _, _ = Interpreter(comp.unit).execute(TxInput(function, [n]))
    res, _, _ = VirtualMachine(comp.program).execute(TxInput(function, [n]))
    assert src == res
    assert res.value == n


@pytest.mark.parametrize("passes", [None, []])
@pytest.mark.parametrize("function", ["depth", "direct", "viaHelper"])
def test_call_depth_limit_is_shared(compile_text, passes, function):
    comp = compile_text(DEEP, passes)
    tx = TxInput(function, [CALL_DEPTH_LIMIT])
    with pytest.raises(CallDepthLimit):
        Interpreter(comp.unit).execute(tx)
    with pytest.raises(CallDepthLimit):
        VirtualMachine(comp.program).execute(tx)


def test_recursive_functions_survive_the_artifact(compile_text):
    comp = compile_text(DEEP)
    assert comp.program.recursive == ["Deep.depth/1", "Deep.down/1"]
    loaded = CompiledArtifact.loads(CompiledArtifact.from_compilation(comp).dumps())
    assert loaded.program.recursive == comp.program.recursive


# --- transaction plumbing ---

def test_tx_words_must_fit():
    with pytest.raises(ValueError):
        TxInput("f", [-1])
    with pytest.raises(ValueError):
        TxInput("f", [1 << 64])


def test_resolve_function_key():
    keys = ["A.f/1", "A.f/2", "A.g/0"]
    assert resolve_function_key(keys, "g") == "A.g/0"
    assert resolve_function_key(keys, "f", 2) == "A.f/2"
    assert resolve_function_key(keys, "f/1") == "A.f/1"
    assert resolve_function_key(keys, "A.f/2") == "A.f/2"
    with pytest.raises(KeyError):
        resolve_function_key(keys, "f")
    with pytest.raises(KeyError):
        resolve_function_key(keys, "h")


def test_parse_storage_name():
    layout = {"count": 0, "hasVoted": 1}
    assert parse_storage_name("count", layout) == 0
    assert parse_storage_name("hasVoted[42]", layout) == (1, 42)
    assert parse_storage_name("hasVoted[0x10]", layout) == (1, 16)
    with pytest.raises(KeyError):
        parse_storage_name("missing[1]", layout)


def test_load_suite_words(tmp_path):
    path = tmp_path / "s.txs.json"
    path.write_text(json.dumps([{"function": "f", "args": ["0x10", 3, True], "sender": "200",
                                 "storage": {"count": "7"}}]))
    (tx,) = load_suite(path)
    assert tx.args == [16, 3, 1]
    assert tx.sender == 200
    assert tx.storage == {"count": 7}


@pytest.mark.parametrize("content", ["{", '{"function": "f"}', '[{"args": [1]}]', '[{"function": "f", "args": ["x"]}]'])
def test_load_suite_rejects(tmp_path, content):
    path = tmp_path / "bad.txs.json"
    path.write_text(content)
    with pytest.raises(MalformedField):
        load_suite(path)


def test_check_expectation():
    result = ExecResult(RETURNED, value=3, storage={"count": 2}, events=[("E", (1,))])
    assert check_expectation(result, None) == []
    assert check_expectation(result, {"status": "returned", "value": 3, "storage": {"count": 2, "other": 0},
                                      "events": [["E", [1]]]}) == []
    problems = check_expectation(result, {"status": "reverted", "value": "0x4", "storage": {"count": 1}})
    assert len(problems) == 3


# --- traces ---

def test_failed_proof_traces_to_its_constraint(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting_strict"))
    result, offsets, _ = VirtualMachine(comp.program).execute(TxInput("submitVote", [2], sender=100))
    assert result.revert_message == "Invalid proof"
    records, _ = reconstruct_trace(offsets, comp.table, comp.unit.registry, comp.program.code)
    last = records[-1]
    assert last.zk_constraint == 1
    assert last.span.text_of(comp.unit.file_texts[0]).startswith("require(verifyZKProof(zkProof)")


def test_repeat_vote_traces_to_second_constraint(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting"))
    vm = VirtualMachine(comp.program)
    _, _, state = vm.execute(TxInput("submitVote", [7], sender=100))
    result, offsets, _ = vm.execute(TxInput("submitVote", [7], sender=100), state)
    assert result.revert_message == "Already voted"
    records, _ = reconstruct_trace(offsets, comp.table, comp.unit.registry, comp.program.code)
    assert records[-1].zk_constraint == 2


def test_trace_starts_at_the_first_statement_after_inlining(compile_text, fixture_source):
    comp = compile_text(fixture_source("zkvoting_strict"))
    assert "ZKVotingStrict.verifyZKProof/1" not in comp.module.functions
    _, offsets, _ = VirtualMachine(comp.program).execute(TxInput("submitVote", [3], sender=100))
    records, _ = reconstruct_trace(offsets, comp.table, comp.unit.registry, comp.program.code)
    text = comp.unit.file_texts[0]
    assert records[0].span.text_of(text).startswith("require(verifyZKProof(zkProof)")
    returns = [n for n, r in enumerate(records) if r.span.text_of(text).startswith("return zkProof % 2")]
    assert returns and returns[0] > 0


def test_trace_collapses_repeats(compile_text, fixture_source):
    comp = compile_text(fixture_source("checkbit"), [])
    _, offsets, _ = VirtualMachine(comp.program).execute(TxInput("countBits", [5]))
    records, dropped = reconstruct_trace(offsets, comp.table, comp.unit.registry, comp.program.code)
    ids = [r.statement_id for r in records]
    assert all(a != b for a, b in zip(ids, ids[1:]))
    assert dropped > 0
    assert len(records) + dropped < len(offsets)


def test_vm_trace_matches_source_statements(compile_text, fixture_source):
    """Unoptimized code maps every executed step onto the source trace, in order"""
    comp = compile_text(fixture_source("checkbit"), [])
    tx = TxInput("countBits", [6])
    _, src_trace, _ = Interpreter(comp.unit).execute(tx)
    _, offsets, _ = VirtualMachine(comp.program).execute(tx)
    records, _ = reconstruct_trace(offsets, comp.table, comp.unit.registry, comp.program.code)
    assert all(lcs_matches([r.statement_id for r in records], collapse(src_trace)[0]))


# --- alignment ---

def test_collapse():
    assert collapse([1, 1, 2, 2, 2, 1]) == ([1, 2, 1], [0, 0, 1, 1, 1, 2])
    assert collapse([]) == ([], [])


def test_lcs_matches_example():
    assert lcs_matches([1, 2, 3], [1, 3]) == [True, False, True]
    assert lcs_matches([], [1]) == []
    assert lcs_matches([4, 5], []) == [False, False]


def _lcs_length(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            table[i + 1][j + 1] = table[i][j] + 1 if x == y else max(table[i][j + 1], table[i + 1][j])
    return table[-1][-1]


@settings(max_examples=200)
@given(st.lists(st.integers(0, 5), max_size=12), st.lists(st.integers(0, 5), max_size=12))
def test_lcs_matches_is_a_longest_common_subsequence(a, b):
    used = lcs_matches(a, b)
    picked = [x for x, keep in zip(a, used) if keep]
    assert len(picked) == _lcs_length(a, b)
    it = iter(b)
    assert all(any(x == y for y in it) for x in picked)


def test_align_counts_raw_events():
    assert align([1, 2, 3], [None, 1, 1, 2, None, 3]) == 4
    assert align([1, 3], [1, 2, 2, 3]) == 2


# --- accuracy and overhead ---

def test_identity_accuracy_is_exact(compile_text, fixture_source, corpus_dir):
    comp = compile_text(fixture_source("zkvoting"), [])
    report = measure_accuracy(comp, load_suite(corpus_dir / "zkvoting.txs.json"), "zkvoting", "zk requires")
    assert report.accuracy == 100.0
    assert report.discrepancies == []
    assert report.coverage_gaps == []
    assert report.mapped > 0


def test_coverage_gaps_are_listed(compile_text, fixture_source):
    comp = compile_text(fixture_source("checkbit"))
    report = measure_accuracy(comp, [TxInput("checkBit", [3])])
    assert report.coverage_gaps == ["BitCheck.countBits/1"]


def test_overhead_needs_repetitions(fixture_source):
    files = [("zkvoting.msol", fixture_source("zkvoting"))]
    with pytest.raises(ValueError):
        measure_source("zkvoting", files, PassConfig.default(), repetitions=2)


def test_overhead_source(fixture_source):
    files = [("zkvoting.msol", fixture_source("zkvoting"))]
    result = measure_source("zkvoting", files, PassConfig.default(), repetitions=3, category="zk requires")
    assert result.bytes_identical
    assert result.artifact_on > result.artifact_off
    assert result.seconds_off > 0 and result.seconds_on > 0
    assert set(result.stages_on) == {"front", "passes", "back"}
