"""
Fault injection - seeded corruptions of an honest mapping table

Each operator returns a mutated copy; the validators are expected to catch
every one of them.
"""

import logging
import os
from dataclasses import replace
from typing import Callable, Dict, Iterable, Optional

import numpy as np

from model.span import SourceSpan
from model.table import MappingTable

logger = logging.getLogger(__name__)

SEED_ENV = "ZKMAP_SEED"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _copy(table: MappingTable) -> MappingTable:
    return MappingTable(entries=list(table.entries), files=list(table.files),
                        synthetic_excluded=table.synthetic_excluded)


def span_shift(table: MappingTable, rng: np.random.Generator, **_) -> MappingTable:
    out = _copy(table)
    i = int(rng.integers(len(out.entries)))
    entry = out.entries[i]
    delta = int(rng.integers(1, 4))
    span = entry.span
    start = span.start + delta if span.start < delta or rng.random() < 0.5 else span.start - delta
    out.entries[i] = replace(entry, span=SourceSpan(start, span.length, span.file))
    return out


def span_swap(table: MappingTable, rng: np.random.Generator, **_) -> MappingTable:
    out = _copy(table)
    order = rng.permutation(len(out.entries))
    first = out.entries[int(order[0])]
    for j in order[1:]:
        other = out.entries[int(j)]
        if other.span != first.span:
            a, b = int(order[0]), int(j)
            out.entries[a] = replace(first, span=other.span)
            out.entries[b] = replace(other, span=first.span)
            return out
    raise ValueError("span swap needs two entries with different spans")


def offset_duplication(table: MappingTable, rng: np.random.Generator, **_) -> MappingTable:
    if len(table.entries) < 2:
        raise ValueError("offset duplication needs two entries")
    out = _copy(table)
    i = int(rng.integers(1, len(out.entries)))
    out.entries[i] = replace(out.entries[i], offset=out.entries[i - 1].offset)
    return out


def registry_foreign_span(table: MappingTable, rng: np.random.Generator,
                          registered: Iterable[SourceSpan] = (), **_) -> MappingTable:
    registered = set(registered)
    out = _copy(table)
    i = int(rng.integers(len(out.entries)))
    entry = out.entries[i]
    limit = max((s.end for s in registered), default=entry.span.end) + 1
    while True:
        start = int(rng.integers(0, limit))
        span = SourceSpan(start, int(rng.integers(1, 8)), entry.span.file)
        if span not in registered:
            break
    out.entries[i] = replace(entry, span=span)
    return out


def dangling_ir_id(table: MappingTable, rng: np.random.Generator,
                   next_id: int = 0, **_) -> MappingTable:
    out = _copy(table)
    i = int(rng.integers(len(out.entries)))
    ceiling = max([next_id] + [e.ir_id + 1 for e in out.entries])
    out.entries[i] = replace(out.entries[i], ir_id=ceiling + int(rng.integers(0, 1000)))
    return out


OPERATORS: Dict[str, Callable[..., MappingTable]] = {
    "span_shift": span_shift,
    "span_swap": span_swap,
    "offset_duplication": offset_duplication,
    "registry_foreign_span": registry_foreign_span,
    "dangling_ir_id": dangling_ir_id,
}


def inject(table: MappingTable, operator: str, seed: Optional[int] = None, **context) -> MappingTable:
    """Apply one named operator; `context` may carry `registered` spans and the module's `next_id`"""
    if not table.entries:
        raise ValueError("cannot corrupt an empty table")
    if operator not in OPERATORS:
        raise ValueError(f"Unknown fault operator: {operator}")
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    mutated = OPERATORS[operator](table, rng, **context)
    logger.debug("[MAPGEN] injected %s (seed %s)", operator, seed)
    return mutated
