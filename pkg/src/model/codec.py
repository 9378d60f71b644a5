"""
Compressed source-map codec (solc legacy "s:l:f:j:m;..." form)

Encoding rules:
    - entries joined by ';' in offset order
    - the (s, l, f) triple is written whole when any part changed, else omitted
    - j and m are omitted when equal to the previous entry
    - trailing empty fields are dropped, so a repeated entry is empty text
zk metadata and confidence are not carried here; see mapgen.export.
"""

from typing import List, Optional, Sequence, Tuple

from model.errors import DanglingInheritance, MalformedField
from model.table import JumpType, MappingTable

LegacyFields = Tuple[int, int, int, JumpType, int]

FIELD_NAMES = ("s", "l", "f", "j", "m")


def encode_compressed(table: MappingTable) -> str:
    return encode_stream(table.legacy_stream())


def encode_stream(stream: Sequence[LegacyFields]) -> str:
    parts = []
    prev: Optional[LegacyFields] = None
    for fields in stream:
        s, l, f, j, m = fields
        if prev is None or (s, l, f) != prev[:3]:
            out = [str(s), str(l), str(f)]
        else:
            out = ["", "", ""]
        out.append("" if prev is not None and j == prev[3] else j.value)
        out.append("" if prev is not None and m == prev[4] else str(m))
        while out and out[-1] == "":
            out.pop()
        parts.append(":".join(out))
        prev = fields
    return ";".join(parts)


def _parse_int(raw: str, name: str, index: int) -> int:
    if not raw.isdigit():
        raise MalformedField(f"entry {index}: field {name}={raw!r} is not a non-negative integer")
    return int(raw)


def decode_compressed(text: str, files: Optional[List[str]] = None) -> List[LegacyFields]:
    """Inverse of encode_compressed; omitted fields inherit from the previous entry"""
    if text == "":
        return []

    stream: List[LegacyFields] = []
    prev: Optional[list] = None
    for index, chunk in enumerate(text.split(";")):
        raw_fields = chunk.split(":") if chunk else []
        if len(raw_fields) > len(FIELD_NAMES):
            raise MalformedField(f"entry {index}: too many fields in {chunk!r}")
        raw_fields += [""] * (len(FIELD_NAMES) - len(raw_fields))

        current = []
        for pos, raw in enumerate(raw_fields):
            name = FIELD_NAMES[pos]
            if raw == "":
                if prev is None:
                    raise DanglingInheritance(f"entry {index}: field {name} omitted with no previous entry")
                current.append(prev[pos])
            elif name == "j":
                try:
                    current.append(JumpType.from_char(raw))
                except ValueError:
                    raise MalformedField(f"entry {index}: unknown jump type {raw!r}")
            else:
                current.append(_parse_int(raw, name, index))
        stream.append(tuple(current))
        prev = current
    return stream
