"""
SourceSpan - a (start, length, file) triple locating a source segment

Offsets are 0-based byte offsets into the UTF-8 encoded file text.
Intervals are half-open: [start, start + length).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple


class SpanRelation(Enum):
    DISJOINT = "Disjoint"
    EQUAL = "Equal"
    A_CONTAINS_B = "AContainsB"
    B_CONTAINS_A = "BContainsA"
    PARTIAL_OVERLAP = "PartialOverlap"


@dataclass(frozen=True, order=True)
class SourceSpan:
    """
    A located source segment

    Attributes:
        start: byte offset of the first byte
        length: number of bytes covered (>= 1 for AST spans)
        file: index into the compilation unit's file list
    """
    start: int
    length: int
    file: int = 0

    @property
    def end(self) -> int:
        return self.start + self.length

    def contains(self, other: "SourceSpan") -> bool:
        """True when other lies inside (or equals) this span"""
        return (self.file == other.file
                and self.start <= other.start
                and other.end <= self.end)

    def is_valid_for(self, files_text: list) -> bool:
        """Check the span against the bytes of the compilation unit"""
        if self.file < 0 or self.file >= len(files_text):
            return False
        if self.start < 0 or self.length < 1:
            return False
        return self.end <= len(files_text[self.file].encode("utf-8"))

    def text_of(self, text: str) -> str:
        data = text.encode("utf-8")
        return data[self.start:self.end].decode("utf-8", errors="replace")

    def line_col(self, text: str) -> Tuple[int, int]:
        """1-based (line, column) of the span start, for display only"""
        prefix = text.encode("utf-8")[:self.start]
        line = prefix.count(b"\n") + 1
        col = self.start - (prefix.rfind(b"\n") + 1) + 1
        return line, col

    def to_triple(self) -> str:
        return f"{self.start}:{self.length}:{self.file}"

    @classmethod
    def parse_triple(cls, text: str) -> "SourceSpan":
        """Parse `s:l:f`; zero-length spans are not valid query spans"""
        parts = text.strip().split(":")
        if len(parts) != 3:
            raise ValueError(f"Invalid span '{text}' (expected s:l:f)")
        start, length, file = (int(p) for p in parts)
        if length < 1 or start < 0 or file < 0:
            raise ValueError(f"Invalid span '{text}' (length must be >= 1)")
        return cls(start, length, file)

    def __repr__(self):
        return f"SourceSpan({self.start}:{self.length}:{self.file})"


def span_relation(a: SourceSpan, b: SourceSpan) -> SpanRelation:
    """Exact interval relation between two spans of the same unit"""
    if a.file != b.file:
        return SpanRelation.DISJOINT
    if a.start == b.start and a.length == b.length:
        return SpanRelation.EQUAL
    if a.end <= b.start or b.end <= a.start:
        return SpanRelation.DISJOINT
    if a.start <= b.start and b.end <= a.end:
        return SpanRelation.A_CONTAINS_B
    if b.start <= a.start and a.end <= b.end:
        return SpanRelation.B_CONTAINS_A
    return SpanRelation.PARTIAL_OVERLAP


def smallest_container(spans, a: SourceSpan, b: SourceSpan):
    """Smallest span among `spans` containing both a and b (ties: lowest start)"""
    best = None
    for span in spans:
        if span.contains(a) and span.contains(b):
            if best is None or (span.length, span.start) < (best.length, best.start):
                best = span
    return best
