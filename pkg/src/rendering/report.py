"""
Human-readable tables for the terminal

Every function returns a string; the CLI decides where it goes.
"""

from typing import List, Optional, Sequence

from execution.accuracy import AccuracyReport
from execution.overhead import OverheadReport
from execution.state import ExecResult
from execution.trace import TraceRecord
from mapgen.validate import ValidationReport
from model.span import SourceSpan
from model.table import MappingEntry

ORACLE_NOTE = ("accuracy oracle: twin execution (source interpreter vs bytecode VM), "
               "statement traces aligned by longest common subsequence")


def table(headers: Sequence[str], rows: Sequence[Sequence], align: Optional[str] = None) -> str:
    """Plain fixed-width table; `align` holds one 'l' or 'r' per column"""
    cells = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))
    align = align or "l" * len(headers)

    def line(row):
        return "  ".join(c.rjust(w) if a == "r" else c.ljust(w)
                         for c, w, a in zip(row, widths, align)).rstrip()

    out = [line(headers), "  ".join("-" * w for w in widths)]
    out.extend(line(row) for row in cells)
    return "\n".join(out)


def snippet(span: SourceSpan, files: Sequence[str], texts: Sequence[str], width: int = 60) -> str:
    """`file:line:col  source text` for a span, falling back to the raw triple"""
    if span.file >= len(texts):
        return span.to_triple()
    text = texts[span.file]
    line, col = span.line_col(text)
    source = " ".join(span.text_of(text).split())
    if len(source) > width:
        source = source[:width - 3] + "..."
    name = files[span.file] if span.file < len(files) else str(span.file)
    return f"{name}:{line}:{col}  {source}"


def accuracy_table(report: AccuracyReport, title: str) -> str:
    rows = [(f.name, f.category or "-", f"{f.accuracy:.2f}%", f"{f.matched}/{f.mapped}",
             f"{100.0 * f.unmapped_ratio:.1f}%", len(f.discrepancies), len(f.coverage_gaps))
            for f in report.fixtures]
    body = table(("fixture", "category", "accuracy", "matched", "unmapped", "twin diffs", "gaps"),
                 rows, "llrrrrr")
    categories = table(("category", "accuracy"),
                       [(k, f"{v:.2f}%") for k, v in report.by_category().items()], "lr")
    return (f"{title}: {report.accuracy:.2f}% ({report.matched}/{report.mapped})\n"
            f"{body}\n\n{categories}")


def overhead_table(report: OverheadReport, timing: bool = True) -> str:
    if timing:
        rows = [(s.name, s.category or "-", f"{1000 * s.seconds_off:.2f}", f"{1000 * s.seconds_on:.2f}",
                 f"{s.overhead:.2f}%" + (" *" if s.below_clock_resolution else ""),
                 f"{s.size_overhead:.1f}%", "yes" if s.bytes_identical else "NO")
                for s in report.sources]
        body = table(("fixture", "category", "off ms", "on ms", "overhead", "size", "same bytes"),
                     rows, "llrrrrl")
        shares = ", ".join(f"{k} {v:.1f}%" for k, v in report.stage_shares().items())
        head = (f"compile overhead: {report.aggregate:.2f}% over {len(report.sources)} source(s), "
                f"median of {report.repetitions}\nstage shares with mapping on: {shares}")
        if any(s.below_clock_resolution for s in report.sources):
            head += "\n(* compiles faster than the clock resolution; overhead is noise)"
    else:
        rows = [(s.name, s.category or "-", f"{s.size_overhead:.1f}%", "yes" if s.bytes_identical else "NO")
                for s in report.sources]
        body = table(("fixture", "category", "size", "same bytes"), rows, "llrl")
        head = f"artifact size overhead: {report.size_aggregate:.2f}%"
    return f"{head}\n{body}"


def validation_table(report: ValidationReport) -> str:
    if report.ok:
        return f"ok: {report.checked} entries, no violations"
    rows = [(v.check, ", ".join(f"0x{e.offset:04x}" for e in v.entries) or "-", v.message)
            for v in report.violations]
    counts = ", ".join(f"{k} {n}" for k, n in sorted(report.by_check().items()))
    return f"{len(report.violations)} violation(s) in {report.checked} entries ({counts})\n" + \
        table(("check", "offsets", "message"), rows)


def entry_line(entry: MappingEntry, files: Sequence[str], texts: Sequence[str]) -> str:
    zk = "-" if entry.zk_constraint is None else str(entry.zk_constraint)
    return (f"0x{entry.offset:04x}  {entry.span.to_triple():<12} I={entry.ir_id:<5} j={entry.jump.value} "
            f"m={entry.modifier_depth} zk={zk} {entry.confidence.letter}  {snippet(entry.span, files, texts)}")


def query_lines(entries: List[MappingEntry], files: Sequence[str], texts: Sequence[str]) -> str:
    if not entries:
        return "no mapping"
    return "\n".join(entry_line(e, files, texts) for e in entries)


def trace_listing(records: Sequence[TraceRecord], dropped: int, result: ExecResult,
                  files: Sequence[str], texts: Sequence[str]) -> str:
    out = []
    for n, record in enumerate(records):
        zk = f"  [zk {record.zk_constraint}]" if record.zk_constraint is not None else ""
        out.append(f"{n:>4}  0x{record.offset:04x}  {snippet(record.span, files, texts)}{zk}")
    out.append(f"{len(records)} statement step(s), {dropped} unmapped instruction(s)")
    if result.reverted:
        out.append(f"REVERTED: {result.revert_message!r}")
        if records:
            last = records[-1]
            zk = f" (zk constraint {last.zk_constraint})" if last.zk_constraint is not None else ""
            out.append(f"  at {last.span.to_triple()} {snippet(last.span, files, texts)}{zk}")
    else:
        out.append(f"returned {result.value if result.value is not None else '-'}")
    return "\n".join(out)
