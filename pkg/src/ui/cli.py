"""
Command-line interface - compile, validate, query, disasm, trace, bench

Exit codes: 0 success, 1 validation failure, expectation mismatch or
compile error, 2 usage error.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from backend.disasm import decode
from execution.interpreter import Interpreter
from execution.trace import reconstruct_trace
from execution.txsuite import check_expectation, load_suite
from execution.vm import VirtualMachine
from lowering.dump import dump_module
from mapgen.export import export_table
from mapgen.query import query_offset, query_span
from model.errors import CompileError, ConfigError, OffsetOutOfRange, ZkMapError
from model.span import SourceSpan
from optimizer.config import PassConfig
from pipeline.artifact import CompiledArtifact
from pipeline.bench import run_bench, validate_compilation
from pipeline.compiler import compile_sources, read_sources
from rendering import report as human

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(ZkMapError):
    """Bad command-line input detected after argument parsing"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _offset(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid offset '{text}'")
    if value < 0:
        raise argparse.ArgumentTypeError(f"invalid offset '{text}'")
    return value


def _span(text: str) -> SourceSpan:
    try:
        return SourceSpan.parse_triple(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "structured"), default="human",
                        help="human tables or JSON")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    parser = _Parser(prog="zkmap", description="MiniSol compiler with source mapping")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", parents=[common], help="compile sources to a .zkb.json artifact")
    p.add_argument("files", nargs="+", type=Path)
    p.add_argument("-o", "--output", type=Path, help="artifact path (default: <first file>.zkb.json)")
    passes = p.add_mutually_exclusive_group()
    passes.add_argument("--passes", help="comma list of passes in run order ('none' for no passes)")
    passes.add_argument("--no-opt", action="store_true", help="disable every pass")
    p.add_argument("--unroll-max", type=int, help="largest trip count that is unrolled")
    p.add_argument("--inline-max", type=int, help="largest callee (in IR instructions) that is inlined")
    p.add_argument("--no-mapping", action="store_true", help="compile without source mapping")
    p.add_argument("--emit-ir", action="store_true", help="print the final IR")
    p.add_argument("--sourcemap-out", type=Path, help="also write the rich sourcemap here")
    p.add_argument("--sourcemap-compressed-out", type=Path, help="also write the compressed sourcemap here")

    p = sub.add_parser("validate", parents=[common], help="run both validators over an artifact")
    p.add_argument("artifact", type=Path)

    p = sub.add_parser("query", parents=[common], help="look up an offset or a span")
    p.add_argument("artifact", type=Path)
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--offset", type=_offset)
    what.add_argument("--span", type=_span)

    p = sub.add_parser("disasm", parents=[common], help="annotated disassembly")
    p.add_argument("artifact", type=Path)

    p = sub.add_parser("trace", parents=[common], help="run transactions and map the VM trace to source")
    p.add_argument("artifact", type=Path)
    p.add_argument("--tx", type=Path, required=True, help="transaction suite (.txs.json)")
    p.add_argument("--index", type=int, help="trace only this transaction; earlier ones still run")

    p = sub.add_parser("bench", parents=[common], help="accuracy and overhead over a corpus directory")
    p.add_argument("corpus", type=Path)
    p.add_argument("--reps", type=int, default=10, help="timing repetitions (0 skips overhead)")
    p.add_argument("--faults", type=int, default=0, help="seeded fault-injection trials per operator and fixture")
    p.add_argument("--workers", type=int, help="threads for accuracy cells")
    p.add_argument("--plot", type=Path, help="write a chart (PNG)")
    p.add_argument("--no-timing", action="store_true", help="leave timing fields out of the report")
    return parser


def _config(args) -> PassConfig:
    overrides = {}
    if args.no_opt:
        overrides["passes"] = []
    elif args.passes is not None:
        overrides["passes"] = PassConfig.parse_passes(args.passes)
    if args.unroll_max is not None:
        overrides["unroll_max_trips"] = args.unroll_max
    if args.inline_max is not None:
        overrides["inline_max_instrs"] = args.inline_max
    overrides["mapping_enabled"] = not args.no_mapping
    return PassConfig.default(**overrides)


def _emit(args, structured: dict, text: str):
    if args.format == "structured":
        print(json.dumps(structured, indent=2))
    else:
        print(text)


# ---------------------------------------------------------------- commands

def cmd_compile(args) -> int:
    config = _config(args)
    files = read_sources(args.files)
    try:
        compilation = compile_sources(files, config)
    except CompileError as e:
        print(e.describe(files), file=sys.stderr)
        return EXIT_FAILED
    artifact = CompiledArtifact.from_compilation(compilation)
    output = args.output or args.files[0].with_suffix(".zkb.json")
    artifact.write(output)
    if args.sourcemap_out:
        args.sourcemap_out.write_text(export_table(compilation.table, "rich", indent=2) + "\n", encoding="utf-8")
    if args.sourcemap_compressed_out:
        args.sourcemap_compressed_out.write_text(export_table(compilation.table, "compressed") + "\n",
                                                 encoding="utf-8")
    summary = {
        "artifact": str(output),
        "bytes": len(compilation.program.code),
        "entries": len(compilation.table),
        "synthetic_excluded": compilation.table.synthetic_excluded,
        "functions": dict(compilation.program.function_table),
        "passes": compilation.passes.to_dict(),
    }
    if args.emit_ir:
        summary["ir"] = dump_module(compilation.module)
        if args.format == "human":
            print(summary["ir"], end="")
    _emit(args, summary,
          f"wrote {output}: {summary['bytes']} byte(s), {summary['entries']} mapping entries "
          f"({summary['synthetic_excluded']} synthetic excluded)")
    return EXIT_OK


def _load(path: Path):
    artifact = CompiledArtifact.read(path)
    files = list(zip(artifact.source_files, artifact.sources))
    return artifact, files


def cmd_validate(args) -> int:
    artifact, _ = _load(args.artifact)
    compilation = artifact.rebuild()
    if compilation.program.code != artifact.program.code:
        logger.warning("[PIPELINE] %s: bytecode differs from a fresh compile of its sources", args.artifact)
    compilation = replace(compilation, program=artifact.program)
    result = validate_compilation(compilation, artifact.table)
    _emit(args, result.to_dict(), human.validation_table(result))
    return EXIT_OK if result.ok else EXIT_FAILED


def cmd_query(args) -> int:
    artifact, _ = _load(args.artifact)
    if args.offset is not None:
        entry = query_offset(artifact.table, args.offset, artifact.program.code)
        entries = [entry] if entry is not None else []
    else:
        offsets = set(query_span(artifact.table, args.span))
        entries = [e for e in artifact.table.entries if e.offset in offsets]
    structured = {"entries": [_entry_dict(e) for e in entries]}
    _emit(args, structured, human.query_lines(entries, artifact.source_files, artifact.sources))
    return EXIT_OK


def _entry_dict(entry) -> dict:
    return {"offset": entry.offset, "span": entry.span.to_triple(), "ir_id": entry.ir_id,
            "jump": entry.jump.value, "modifier_depth": entry.modifier_depth,
            "zk_constraint": entry.zk_constraint, "confidence": entry.confidence.name.lower()}


def cmd_disasm(args) -> int:
    artifact, _ = _load(args.artifact)
    rows, lines = [], []
    for instr in decode(artifact.program.code):
        entry = artifact.table.entry_at(instr.offset)
        rows.append({"offset": instr.offset, "instruction": instr.render().split(" ", 1)[1],
                     "span": entry.span.to_triple() if entry is not None else None})
        note = ""
        if entry is not None:
            note = "  ; " + human.snippet(entry.span, artifact.source_files, artifact.sources, 40)
        lines.append(f"{instr.render():<32}{note}")
    _emit(args, {"instructions": rows}, "\n".join(lines))
    return EXIT_OK


def cmd_trace(args) -> int:
    artifact, files = _load(args.artifact)
    compilation = artifact.rebuild()
    registry = compilation.unit.registry
    txs = load_suite(args.tx)
    if args.index is not None and not 0 <= args.index < len(txs):
        raise UsageError(f"--index {args.index} outside suite of {len(txs)} transaction(s)")
    last = len(txs) - 1 if args.index is None else args.index

    vm = VirtualMachine(artifact.program)
    interpreter = Interpreter(compilation.unit)
    vm_state, src_state = vm.initial_storage(), interpreter.initial_storage()
    failed = False
    results, texts = [], []
    for n, tx in enumerate(txs[:last + 1]):
        result, offsets, vm_state = vm.execute(tx, vm_state)
        reference, _, src_state = interpreter.execute(tx, src_state)
        if args.index is not None and n != args.index:
            continue
        records, dropped = reconstruct_trace(offsets, artifact.table, registry, artifact.program.code)
        problems = check_expectation(result, tx.expect)
        if result != reference:
            problems.append(f"interpreter disagrees: {reference.to_dict()}")
        failed = failed or bool(problems)
        entry = {"index": n, "function": tx.function, "result": result.to_dict(),
                 "trace": [{"offset": r.offset, "statement_id": r.statement_id, "span": r.span.to_triple(),
                            "zk_constraint": r.zk_constraint} for r in records],
                 "dropped": dropped, "problems": problems}
        if result.reverted and records:
            entry["failing_statement"] = {"span": records[-1].span.to_triple(),
                                          "zk_constraint": records[-1].zk_constraint,
                                          "revert": result.revert_message}
        results.append(entry)
        text = f"tx {n}: {tx.function}({', '.join(str(a) for a in tx.args)})\n" + \
            human.trace_listing(records, dropped, result, artifact.source_files, artifact.sources)
        text += "".join(f"\n  expectation: {p}" for p in problems)
        texts.append(text)
    _emit(args, {"transactions": results}, "\n\n".join(texts))
    return EXIT_FAILED if failed else EXIT_OK


def cmd_bench(args) -> int:
    if args.reps and args.reps < 3:
        raise UsageError("--reps needs at least 3 repetitions (or 0 to skip timing)")
    timing = not args.no_timing
    bench = run_bench(args.corpus, repetitions=args.reps, fault_trials=args.faults, workers=args.workers)
    if args.plot:
        from rendering.plotter import plot_bench
        plot_bench(bench, args.plot)
    parts = [human.ORACLE_NOTE,
             human.accuracy_table(bench.identity, "identity pipeline"),
             human.accuracy_table(bench.optimized, "default pipeline")]
    if bench.overhead is not None:
        parts.append(human.overhead_table(bench.overhead, timing))
    bad = {k: v for k, v in bench.violations.items() if v}
    parts.append("validators: " + (f"violations in {bad}" if bad else "no violations on honest output"))
    if bench.faults:
        parts.append(human.table(("operator", "trials", "detected", "rate"),
                                 [(f.operator, f.trials, f.detected, f"{f.rate:.1f}%") for f in bench.faults],
                                 "lrrr"))
    for name, message in bench.failures.items():
        parts.append(f"FAILED {name}: {message}")
    _emit(args, bench.to_dict(timing), "\n\n".join(parts))
    return EXIT_OK if bench.ok else EXIT_FAILED


COMMANDS = {
    "compile": cmd_compile,
    "validate": cmd_validate,
    "query": cmd_query,
    "disasm": cmd_disasm,
    "trace": cmd_trace,
    "bench": cmd_bench,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, OffsetOutOfRange) as e:
        print(f"zkmap: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CompileError as e:
        print(f"zkmap: {e.message}", file=sys.stderr)
        return EXIT_FAILED
    except (ZkMapError, OSError, KeyError) as e:
        print(f"zkmap: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


def main(argv: Optional[List[str]] = None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(dispatch(argv))
