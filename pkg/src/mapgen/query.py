"""
Runtime queries over a mapping table
"""

import bisect
from typing import List, Optional

from backend.disasm import instruction_offsets
from model.errors import OffsetOutOfRange
from model.span import SourceSpan, SpanRelation, span_relation
from model.table import MappingEntry, MappingTable

RELATED = (SpanRelation.EQUAL, SpanRelation.A_CONTAINS_B, SpanRelation.B_CONTAINS_A)


class OffsetIndex:
    """Instruction boundaries of one program, for offsets that land inside an immediate"""

    def __init__(self, code: bytes):
        self.size = len(code)
        self.starts = instruction_offsets(code)

    def covering(self, offset: int) -> int:
        if offset < 0 or offset >= self.size:
            raise OffsetOutOfRange(f"offset 0x{offset:04x} outside program of {self.size} byte(s)")
        return self.starts[bisect.bisect_right(self.starts, offset) - 1]


def query_offset(table: MappingTable, offset: int, code: bytes,
                 index: Optional[OffsetIndex] = None) -> Optional[MappingEntry]:
    """Entry of the instruction covering `offset`; None when that instruction is unmapped"""
    index = index or OffsetIndex(code)
    return table.entry_at(index.covering(offset))


def query_span(table: MappingTable, span: SourceSpan) -> List[int]:
    """Offsets whose span equals, contains or lies inside `span`"""
    return [e.offset for e in table.entries if span_relation(e.span, span) in RELATED]
