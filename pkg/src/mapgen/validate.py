"""
Mapping table validators

Syntactic checks look at the table alone; structural checks compare it with
the statement registry, the final IR and the program it describes. Neither
raises on a violation: every problem found goes into the report.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence

from backend.disasm import decode
from backend.emitter import BytecodeProgram
from frontend.registry import StatementRegistry
from lowering.ir import IrModule
from model.span import SourceSpan, SpanRelation, span_relation
from model.table import JumpType, MappingEntry, MappingTable

logger = logging.getLogger(__name__)

BLOCK_ENDERS = ("JUMP", "JUMPI", "RETURN", "STOP", "REVERT")


@dataclass(frozen=True)
class Violation:
    """
    Attributes:
        check: short name of the failed check
        message: what is wrong
        entries: the entries involved
    """
    check: str
    message: str
    entries: tuple = ()

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "message": self.message,
            "offsets": [e.offset for e in self.entries],
        }


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, check: str, message: str, *entries: MappingEntry):
        self.violations.append(Violation(check, message, tuple(entries)))

    def by_check(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for v in self.violations:
            counts[v.check] = counts.get(v.check, 0) + 1
        return counts

    def merged(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.violations + other.violations, max(self.checked, other.checked))

    def to_dict(self) -> dict:
        return {"ok": self.ok, "entries_checked": self.checked,
                "violations": [v.to_dict() for v in self.violations]}


# ---------------------------------------------------------------- syntactic

def validate_syntactic(table: MappingTable, file_texts: Optional[Sequence[str]] = None) -> ValidationReport:
    """Offset order and uniqueness, no partially overlapping spans, spans inside their files"""
    report = ValidationReport(checked=len(table))
    entries = table.entries

    for prev, cur in zip(entries, entries[1:]):
        if cur.offset == prev.offset:
            report.add("uniqueness", f"offset 0x{cur.offset:04x} mapped twice", prev, cur)
        elif cur.offset < prev.offset:
            report.add("order", f"offset 0x{cur.offset:04x} follows 0x{prev.offset:04x}", prev, cur)

    first_with: Dict[SourceSpan, MappingEntry] = {}
    for entry in entries:
        first_with.setdefault(entry.span, entry)
    for a, b in combinations(sorted(first_with), 2):
        if a.file == b.file and span_relation(a, b) == SpanRelation.PARTIAL_OVERLAP:
            report.add("overlap", f"spans {a.to_triple()} and {b.to_triple()} partially overlap",
                       first_with[a], first_with[b])

    for entry in entries:
        span = entry.span
        if file_texts is not None:
            valid = span.is_valid_for(list(file_texts))
        else:
            valid = span.start >= 0 and span.length >= 1 and 0 <= span.file < max(len(table.files), 1)
        if not valid:
            report.add("bounds", f"span {span.to_triple()} is not inside its file", entry)
    logger.debug("[MAPGEN] syntactic: %d violation(s)", len(report.violations))
    return report


# ---------------------------------------------------------------- structural

def bytecode_blocks(code: bytes) -> Dict[int, int]:
    """Instruction offset -> index of the straight-line block holding it"""
    blocks: Dict[int, int] = {}
    current = 0
    ended = False
    for instr in decode(code):
        if instr.mnemonic == "JUMPDEST" or ended:
            current += 1
        blocks[instr.offset] = current
        ended = instr.mnemonic in BLOCK_ENDERS
    return blocks


def validate_structural(table: MappingTable, registry: StatementRegistry, module: IrModule,
                        program: BytecodeProgram) -> ValidationReport:
    """Registry membership, live IR ids, control-flow order, call/return pairing, provenance agreement"""
    report = ValidationReport(checked=len(table))
    registered = registry.registered_spans()
    index = module.instruction_index()

    for entry in table.entries:
        if entry.span not in registered:
            report.add("membership", f"span {entry.span.to_triple()} is not a registered span", entry)
        instr = index.get(entry.ir_id)
        if instr is None:
            report.add("ir_id", f"%{entry.ir_id} is not in the final IR", entry)
        elif instr.provenance.primary_span != entry.span:
            report.add("provenance", f"%{entry.ir_id} originates at {instr.provenance.primary_span} "
                                     f"but is mapped to {entry.span.to_triple()}", entry)

    blocks = bytecode_blocks(program.code)
    prev: Optional[MappingEntry] = None
    prev_stmt: Optional[int] = None
    for entry in table.entries:
        stmt = registry.statement_of_span(entry.span)
        if stmt is None:
            prev = None
            continue
        if prev is not None and blocks.get(prev.offset) == blocks.get(entry.offset) and stmt != prev_stmt:
            if not registry.reachable(prev_stmt, stmt):
                report.add("control_flow", f"statement {stmt} shares a block with {prev_stmt} "
                                           f"but cannot run after it", prev, entry)
        prev, prev_stmt = entry, stmt

    out_of = {e.ir_id for e in table.entries if e.jump == JumpType.OUT_OF}
    for entry in table.entries:
        if entry.jump != JumpType.INTO:
            continue
        instr = index.get(entry.ir_id)
        if instr is None or instr.opcode != "call":
            report.add("call_pairing", "jump into a function from a non-call instruction", entry)
            continue
        callee = module.functions.get(instr.attrs["callee"])
        if callee is None:
            report.add("call_pairing", f"callee {instr.attrs['callee']} is not in the module", entry)
            continue
        returns = [i.ir_id for i in callee.instructions() if i.opcode == "return"]
        if returns and not any(r in out_of for r in returns):
            report.add("call_pairing", f"{callee.key} is entered but has no mapped return", entry)
    logger.debug("[MAPGEN] structural: %d violation(s)", len(report.violations))
    return report
