"""
Provenance - where an IR instruction came from

Attached to every IR instruction and carried through every pass.
"""

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterable, Optional, Tuple

from model.span import SourceSpan, smallest_container


class Confidence(IntEnum):
    """Merge order: EXACT > APPROXIMATE > SYNTHETIC"""
    SYNTHETIC = 0
    APPROXIMATE = 1
    EXACT = 2

    @property
    def letter(self) -> str:
        return {Confidence.EXACT: "E", Confidence.APPROXIMATE: "A", Confidence.SYNTHETIC: "S"}[self]

    @classmethod
    def from_name(cls, name: str) -> "Confidence":
        lookup = {c.name.lower(): c for c in cls}
        lookup.update({c.letter.lower(): c for c in cls})
        try:
            return lookup[name.strip().lower()]
        except KeyError:
            raise ValueError(f"Unknown confidence: {name}")


@dataclass(frozen=True)
class Provenance:
    """
    Source origin of one IR instruction

    Attributes:
        primary_span: originating expression/statement span, None when absent
        confidence: how much the span can be trusted
        inline_chain: call-site spans, outermost first
        zk_constraint: constraint index when the instruction backs one
        statement_id: innermost enclosing source statement
    """
    primary_span: Optional[SourceSpan] = None
    confidence: Confidence = Confidence.SYNTHETIC
    inline_chain: Tuple[SourceSpan, ...] = ()
    zk_constraint: Optional[int] = None
    statement_id: Optional[int] = None

    @classmethod
    def exact(cls, span: SourceSpan, statement_id: Optional[int] = None) -> "Provenance":
        return cls(primary_span=span, confidence=Confidence.EXACT, statement_id=statement_id)

    @classmethod
    def synthetic(cls, zk_constraint: Optional[int] = None) -> "Provenance":
        return cls(confidence=Confidence.SYNTHETIC, zk_constraint=zk_constraint)

    @property
    def is_mappable(self) -> bool:
        return self.primary_span is not None and self.confidence != Confidence.SYNTHETIC

    def downgraded(self, to: Confidence = Confidence.APPROXIMATE) -> "Provenance":
        return replace(self, confidence=min(self.confidence, to))

    def with_call_site(self, call_site: SourceSpan,
                       outer: Tuple[SourceSpan, ...] = ()) -> "Provenance":
        """Prefix the chain with the call site and whatever chain the call itself had"""
        return replace(self, inline_chain=tuple(outer) + (call_site,) + self.inline_chain)

    def with_constraint(self, index: Optional[int]) -> "Provenance":
        return replace(self, zk_constraint=index)


def _common_prefix(a: Tuple[SourceSpan, ...], b: Tuple[SourceSpan, ...]) -> Tuple[SourceSpan, ...]:
    out = []
    for x, y in zip(a, b):
        if x != y:
            break
        out.append(x)
    return tuple(out)


def merge_provenance(a: Provenance, b: Provenance,
                     registered: Iterable[SourceSpan] = ()) -> Provenance:
    """
    Combine the provenance of two instructions that fuse into one

    The span becomes the smallest registered span holding both origins; when
    none exists the left span survives at Approximate confidence.
    """
    confidence = min(a.confidence, b.confidence)
    sa, sb = a.primary_span, b.primary_span

    if sa is not None and sb is not None:
        if sa == sb:
            span = sa
        else:
            container = smallest_container(registered, sa, sb) if sa.file == sb.file else None
            if container is not None:
                span = container
            else:
                span = sa
                confidence = min(confidence, Confidence.APPROXIMATE)
    elif sa is None and sb is None:
        span = None
    else:
        span = sa if sa is not None else sb
        confidence = min(confidence, Confidence.APPROXIMATE)

    chain = a.inline_chain if a.inline_chain == b.inline_chain else _common_prefix(a.inline_chain, b.inline_chain)

    return Provenance(
        primary_span=span,
        confidence=confidence,
        inline_chain=chain,
        zk_constraint=a.zk_constraint if a.zk_constraint is not None else b.zk_constraint,
        statement_id=a.statement_id if a.statement_id is not None else b.statement_id,
    )
