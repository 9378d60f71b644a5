"""
Mapping Table - the unified (s, l, f, I, B) records
"""

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from model.provenance import Confidence
from model.span import SourceSpan


class JumpType(Enum):
    INTO = "i"
    OUT_OF = "o"
    REGULAR = "-"

    @classmethod
    def from_char(cls, char: str) -> "JumpType":
        for jt in cls:
            if jt.value == char:
                return jt
        raise ValueError(f"Unknown jump type: {char!r}")


@dataclass(frozen=True)
class MappingEntry:
    """
    One bytecode instruction's source mapping

    Attributes:
        span: the (s, l, f) triple
        ir_id: IR instruction the bytes implement (I)
        offset: first byte of the encoded instruction (B)
        jump: call/return marker
        modifier_depth: modifier nesting at this point (function body = 0)
        zk_constraint: constraint index, if the instruction backs one
        confidence: provenance confidence of the IR instruction
    """
    span: SourceSpan
    ir_id: int
    offset: int
    jump: JumpType = JumpType.REGULAR
    modifier_depth: int = 0
    zk_constraint: Optional[int] = None
    confidence: Confidence = Confidence.EXACT

    def legacy_fields(self):
        """The (s, l, f, j, m) tuple carried by the compressed format"""
        return (self.span.start, self.span.length, self.span.file, self.jump, self.modifier_depth)


@dataclass
class MappingTable:
    """
    Entries sorted strictly ascending by offset, plus the file list

    `synthetic_excluded` counts logged instructions that got no entry because
    their provenance is Synthetic or has no span.
    """
    entries: List[MappingEntry] = field(default_factory=list)
    files: List[str] = field(default_factory=list)
    synthetic_excluded: int = 0

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def offsets(self) -> List[int]:
        return [e.offset for e in self.entries]

    def entry_at(self, offset: int) -> Optional[MappingEntry]:
        """Exact lookup by instruction start offset"""
        offsets = self.offsets
        i = bisect.bisect_left(offsets, offset)
        if i < len(offsets) and offsets[i] == offset:
            return self.entries[i]
        return None

    def distinct_spans(self) -> List[SourceSpan]:
        return sorted({e.span for e in self.entries})

    def legacy_stream(self):
        return [e.legacy_fields() for e in self.entries]

    def sort(self):
        self.entries.sort(key=lambda e: e.offset)
