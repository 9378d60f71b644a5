"""
Trace reconstruction - VM offsets back to source statements
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from frontend.registry import StatementRegistry
from mapgen.query import OffsetIndex, query_offset
from model.errors import OffsetOutOfRange, TableMismatch
from model.span import SourceSpan
from model.table import MappingTable


@dataclass(frozen=True)
class TraceRecord:
    """
    One step of a reconstructed source trace

    Attributes:
        statement_id: statement that was executing
        span: span of the first mapped instruction of the step
        zk_constraint: constraint index carried by any instruction of the step
        offset: first VM offset of the step
    """
    statement_id: int
    span: SourceSpan
    zk_constraint: Optional[int]
    offset: int


def mapped_statements(offsets: Sequence[int], table: MappingTable, registry: StatementRegistry,
                      code: bytes) -> List[Tuple[int, Optional[int], Optional[object]]]:
    """Per executed offset: (offset, statement id or None, entry or None)"""
    index = OffsetIndex(code)
    out = []
    for offset in offsets:
        try:
            entry = query_offset(table, offset, code, index)
        except OffsetOutOfRange as e:
            raise TableMismatch(f"trace offset outside the program: {e}")
        statement = registry.statement_of_span(entry.span) if entry is not None else None
        out.append((offset, statement, entry))
    return out


def reconstruct_trace(offsets: Sequence[int], table: MappingTable, registry: StatementRegistry,
                      code: bytes) -> Tuple[List[TraceRecord], int]:
    """Collapsed statement trace and the number of unmapped offsets dropped"""
    records: List[TraceRecord] = []
    dropped = 0
    for offset, statement, entry in mapped_statements(offsets, table, registry, code):
        if statement is None:
            dropped += 1
            continue
        if records and records[-1].statement_id == statement:
            last = records[-1]
            if last.zk_constraint is None and entry.zk_constraint is not None:
                records[-1] = TraceRecord(last.statement_id, last.span, entry.zk_constraint, last.offset)
            continue
        records.append(TraceRecord(statement, registry.spans[statement], entry.zk_constraint, offset))
    return records, dropped


def collapse(sequence: Sequence[int]) -> Tuple[List[int], List[int]]:
    """Drop consecutive duplicates; also return, per input item, the index of its representative"""
    collapsed: List[int] = []
    owners: List[int] = []
    for item in sequence:
        if not collapsed or collapsed[-1] != item:
            collapsed.append(item)
        owners.append(len(collapsed) - 1)
    return collapsed, owners
