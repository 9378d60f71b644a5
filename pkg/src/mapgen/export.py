"""
Source map export - rich JSON entries and the compressed legacy string
"""

import json
from typing import List, Optional, Union

from model.codec import decode_compressed, encode_compressed
from model.errors import MalformedField
from model.provenance import Confidence
from model.span import SourceSpan
from model.table import JumpType, MappingEntry, MappingTable

RICH_FIELDS = ("s", "l", "f", "ir_id", "offset", "jump", "modifier_depth", "zk_constraint", "confidence")


def entry_to_dict(entry: MappingEntry) -> dict:
    return {
        "s": entry.span.start,
        "l": entry.span.length,
        "f": entry.span.file,
        "ir_id": entry.ir_id,
        "offset": entry.offset,
        "jump": entry.jump.value,
        "modifier_depth": entry.modifier_depth,
        "zk_constraint": entry.zk_constraint,
        "confidence": entry.confidence.name.lower(),
    }


def entry_from_dict(data: dict) -> MappingEntry:
    missing = [name for name in RICH_FIELDS if name not in data]
    if missing:
        raise MalformedField(f"source map entry lacks {', '.join(missing)}")
    try:
        return MappingEntry(
            span=SourceSpan(int(data["s"]), int(data["l"]), int(data["f"])),
            ir_id=int(data["ir_id"]),
            offset=int(data["offset"]),
            jump=JumpType.from_char(data["jump"]),
            modifier_depth=int(data["modifier_depth"]),
            zk_constraint=None if data["zk_constraint"] is None else int(data["zk_constraint"]),
            confidence=Confidence.from_name(data["confidence"]),
        )
    except (TypeError, ValueError) as e:
        raise MalformedField(f"bad source map entry {data!r}: {e}")


def rich_document(table: MappingTable) -> Union[list, dict]:
    """
    JSON-ready form; an empty table is an empty list

    The empty form carries neither `files` nor `synthetic_excluded`, so a table
    whose instructions were all gadgets or dispatch stubs reads back with an
    exclusion count of 0. Artifacts restore `files` from `source_files`.
    """
    if not table.entries:
        return []
    return {
        "files": list(table.files),
        "entries": [entry_to_dict(e) for e in table.entries],
        "synthetic_excluded": table.synthetic_excluded,
    }


def table_from_document(document: Union[list, dict]) -> MappingTable:
    if isinstance(document, list):
        return MappingTable(entries=[entry_from_dict(d) for d in document])
    if not isinstance(document, dict):
        raise MalformedField("source map must be a list or an object")
    return MappingTable(
        entries=[entry_from_dict(d) for d in document.get("entries", [])],
        files=list(document.get("files", [])),
        synthetic_excluded=int(document.get("synthetic_excluded", 0)),
    )


def export_table(table: MappingTable, fmt: str = "rich", indent: Optional[int] = None) -> str:
    if fmt == "rich":
        return json.dumps(rich_document(table), indent=indent)
    if fmt == "compressed":
        return encode_compressed(table)
    raise ValueError(f"Unknown source map format: {fmt}")


def import_rich(text: str) -> MappingTable:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedField(f"source map is not valid JSON: {e}")
    return table_from_document(document)


def import_compressed(text: str, files: Optional[List[str]] = None):
    """The (s, l, f, j, m) stream; ir ids and offsets are not carried by this format"""
    return decode_compressed(text, files)
