"""
Tests for the command-line interface
"""

import json
import shutil

import pytest

from ui.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, dispatch


@pytest.fixture
def workdir(tmp_path, corpus_dir):
    for name in ("zkvoting", "zkvoting_strict", "checkbit"):
        shutil.copy(corpus_dir / f"{name}.msol", tmp_path)
        shutil.copy(corpus_dir / f"{name}.txs.json", tmp_path)
    return tmp_path


def structured(capsys, argv):
    code = dispatch(argv + ["--format", "structured"])
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def artifact(workdir, capsys):
    path = workdir / "strict.zkb.json"
    assert dispatch(["compile", str(workdir / "zkvoting_strict.msol"), "-o", str(path)]) == EXIT_OK
    capsys.readouterr()
    return path


# --- compile ---

def test_compile_writes_default_artifact(workdir, capsys):
    code, summary = structured(capsys, ["compile", str(workdir / "zkvoting.msol")])
    assert code == EXIT_OK
    out = workdir / "zkvoting.zkb.json"
    assert out.exists()
    assert summary["artifact"] == str(out)
    assert summary["entries"] > 0
    assert "ZKVoting.submitVote/1" in summary["functions"]
    document = json.loads(out.read_text())
    assert document["version"] == 1
    assert document["sources"][0].startswith("// category: zk requires")


def test_compile_is_reproducible(workdir, capsys):
    first, second = workdir / "a.zkb.json", workdir / "b.zkb.json"
    for out in (first, second):
        assert dispatch(["compile", str(workdir / "checkbit.msol"), "-o", str(out)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_compile_without_mapping(workdir, capsys):
    code, summary = structured(capsys, ["compile", str(workdir / "zkvoting.msol"), "--no-mapping"])
    assert code == EXIT_OK
    assert summary["entries"] == 0
    document = json.loads((workdir / "zkvoting.zkb.json").read_text())
    assert document["sourcemap"] == []
    assert document["sourcemap_compressed"] == ""


def test_compile_options(workdir, capsys):
    rich, compressed = workdir / "map.json", workdir / "map.txt"
    code, summary = structured(capsys, ["compile", str(workdir / "checkbit.msol"), "--passes", "inline,dce",
                                        "--inline-max", "10", "--emit-ir", "--sourcemap-out", str(rich),
                                        "--sourcemap-compressed-out", str(compressed)])
    assert code == EXIT_OK
    assert [p["name"] for p in summary["passes"]["passes"]] == ["inline", "dce"]
    assert summary["ir"].startswith("function BitCheck.checkBit/1 public returns {")
    assert len(json.loads(rich.read_text())["entries"]) == summary["entries"]
    assert compressed.read_text().count(";") == summary["entries"] - 1


def test_compile_emit_ir_human(workdir, capsys):
    assert dispatch(["compile", str(workdir / "checkbit.msol"), "--no-opt", "--emit-ir"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "function BitCheck.countBits/1 public returns {" in out
    assert "wrote " in out


def test_compile_error_is_located(tmp_path, capsys):
    source = tmp_path / "broken.msol"
    source.write_text("contract B {\n    function f() { x = 1; }\n}\n")
    assert dispatch(["compile", str(source)]) == EXIT_FAILED
    err = capsys.readouterr().err
    assert err.startswith("broken.msol:2:20:")
    assert not (tmp_path / "broken.zkb.json").exists()


def test_unknown_pass_is_usage_error(workdir, capsys):
    assert dispatch(["compile", str(workdir / "zkvoting.msol"), "--passes", "magic"]) == EXIT_USAGE
    assert "Unknown pass" in capsys.readouterr().err


def test_missing_source_file(tmp_path, capsys):
    assert dispatch(["compile", str(tmp_path / "absent.msol")]) == EXIT_FAILED


def test_conflicting_pass_flags(workdir):
    with pytest.raises(SystemExit) as exc:
        dispatch(["compile", str(workdir / "zkvoting.msol"), "--passes", "dce", "--no-opt"])
    assert exc.value.code == EXIT_USAGE


# --- validate ---

def test_validate_honest_artifact(artifact, capsys):
    code, report = structured(capsys, ["validate", str(artifact)])
    assert code == EXIT_OK
    assert report["ok"] is True
    assert report["violations"] == []


def test_validate_corrupted_artifact(artifact, capsys):
    document = json.loads(artifact.read_text())
    entries = document["sourcemap"]["entries"]
    entries[0]["s"], entries[1]["s"] = entries[1]["s"], entries[0]["s"] + 1
    artifact.write_text(json.dumps(document))
    assert dispatch(["validate", str(artifact)]) == EXIT_FAILED
    assert "violation" in capsys.readouterr().out


def test_validate_malformed_artifact(tmp_path, capsys):
    path = tmp_path / "bad.zkb.json"
    path.write_text('{"version": 1}')
    assert dispatch(["validate", str(path)]) == EXIT_FAILED
    assert "MalformedField" in capsys.readouterr().err


# --- query and disasm ---

def test_query_offset(artifact, capsys):
    document = json.loads(artifact.read_text())
    first = document["sourcemap"]["entries"][0]
    code, result = structured(capsys, ["query", str(artifact), "--offset", hex(first["offset"])])
    assert code == EXIT_OK
    assert result["entries"][0]["span"] == f"{first['s']}:{first['l']}:{first['f']}"


def test_query_offset_out_of_range(artifact, capsys):
    assert dispatch(["query", str(artifact), "--offset", "1000000"]) == EXIT_USAGE
    assert "outside program" in capsys.readouterr().err


def test_query_bad_offset_text(artifact):
    with pytest.raises(SystemExit) as exc:
        dispatch(["query", str(artifact), "--offset", "0xZZ"])
    assert exc.value.code == EXIT_USAGE


def test_query_span(artifact, capsys):
    document = json.loads(artifact.read_text())
    text = document["sources"][0]
    start = text.encode("utf-8").index(b"require(!hasVoted")
    span = next(e for e in document["sourcemap"]["entries"] if e["s"] == start)
    code, result = structured(capsys, ["query", str(artifact), "--span", f"{span['s']}:{span['l']}:0"])
    assert code == EXIT_OK
    assert result["entries"]


def test_disasm(artifact, capsys):
    code, listing = structured(capsys, ["disasm", str(artifact)])
    assert code == EXIT_OK
    rows = listing["instructions"]
    assert rows[0]["offset"] == 0
    assert any(r["span"] is not None for r in rows)
    assert dispatch(["disasm", str(artifact)]) == EXIT_OK
    human = capsys.readouterr().out.splitlines()
    assert len(human) == len(rows)


# --- trace ---

def test_trace_suite(artifact, workdir, capsys):
    assert dispatch(["trace", str(artifact), "--tx", str(workdir / "zkvoting_strict.txs.json")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "REVERTED: 'Invalid proof'" in out
    assert "(zk constraint 1)" in out


def test_trace_failing_statement(artifact, workdir, capsys):
    code, result = structured(capsys, ["trace", str(artifact), "--tx", str(workdir / "zkvoting_strict.txs.json"),
                                       "--index", "2"])
    assert code == EXIT_OK
    (tx,) = result["transactions"]
    assert tx["index"] == 2
    assert tx["failing_statement"]["zk_constraint"] == 2
    assert tx["failing_statement"]["revert"] == "Already voted"
    assert tx["problems"] == []


def test_trace_expectation_mismatch(artifact, workdir, capsys):
    suite = workdir / "wrong.txs.json"
    suite.write_text(json.dumps([{"function": "submitVote", "args": [3], "sender": 1,
                                  "expect": {"status": "reverted"}}]))
    assert dispatch(["trace", str(artifact), "--tx", str(suite)]) == EXIT_FAILED
    assert "expectation: status returned" in capsys.readouterr().out


def test_trace_index_out_of_range(artifact, workdir, capsys):
    argv = ["trace", str(artifact), "--tx", str(workdir / "zkvoting_strict.txs.json"), "--index", "9"]
    assert dispatch(argv) == EXIT_USAGE


def test_trace_unknown_function(artifact, workdir, capsys):
    suite = workdir / "unknown.txs.json"
    suite.write_text(json.dumps([{"function": "steal"}]))
    assert dispatch(["trace", str(artifact), "--tx", str(suite)]) == EXIT_FAILED


# --- bench ---

@pytest.fixture
def small_corpus(tmp_path, corpus_dir):
    directory = tmp_path / "corpus"
    directory.mkdir()
    for name in ("zkvoting", "misc_math"):
        shutil.copy(corpus_dir / f"{name}.msol", directory)
        shutil.copy(corpus_dir / f"{name}.txs.json", directory)
    return directory


def test_bench_without_timing(small_corpus, capsys):
    code, report = structured(capsys, ["bench", str(small_corpus), "--reps", "0", "--faults", "2"])
    assert code == EXIT_OK
    assert report["identity"]["accuracy"] == 100.0
    assert report["overhead"] is None
    assert {f["operator"] for f in report["faults"]} == {"span_shift", "span_swap", "offset_duplication",
                                                         "registry_foreign_span", "dangling_ir_id"}
    assert all(f["rate"] == 100.0 for f in report["faults"])


def test_bench_human_with_plot(small_corpus, tmp_path, capsys):
    chart = tmp_path / "bench.png"
    assert dispatch(["bench", str(small_corpus), "--reps", "3", "--plot", str(chart)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("accuracy oracle:")
    assert "identity pipeline: 100.00%" in out
    assert chart.stat().st_size > 0


def test_bench_needs_three_reps(small_corpus, capsys):
    assert dispatch(["bench", str(small_corpus), "--reps", "2"]) == EXIT_USAGE


def test_bench_missing_corpus(tmp_path, capsys):
    assert dispatch(["bench", str(tmp_path / "nowhere"), "--reps", "0"]) == EXIT_FAILED
