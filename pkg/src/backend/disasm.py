"""
Disassembler and assembler for the listing format

    0x0000 PUSH 0x5
    0x0009 ADD

Bytes that are not an opcode are listed as `INVALID 0xNN` so the listing
still re-assembles to the same program.
"""

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

from backend.isa import BY_CODE, BY_NAME, OpSpec, encode
from model.errors import BackendError, TruncatedImmediate


@dataclass(frozen=True)
class Decoded:
    offset: int
    spec: Optional[OpSpec]
    immediates: Tuple[int, ...]
    raw: int

    @property
    def mnemonic(self) -> str:
        return self.spec.name if self.spec is not None else "INVALID"

    @property
    def size(self) -> int:
        return self.spec.size if self.spec is not None else 1

    def render(self) -> str:
        if self.spec is None:
            return f"0x{self.offset:04x} INVALID 0x{self.raw:02x}"
        parts = [f"0x{self.offset:04x}", self.spec.name] + [hex(v) for v in self.immediates]
        return " ".join(parts)


def decode_at(code: bytes, offset: int) -> Decoded:
    raw = code[offset]
    spec = BY_CODE.get(raw)
    if spec is None:
        return Decoded(offset, None, (), raw)
    position = offset + 1
    values = []
    for width in spec.immediates:
        if position + width > len(code):
            raise TruncatedImmediate(f"{spec.name} at 0x{offset:04x} needs {width} more byte(s)")
        values.append(int.from_bytes(code[position:position + width], "big"))
        position += width
    return Decoded(offset, spec, tuple(values), raw)


def decode(code: bytes) -> Iterator[Decoded]:
    offset = 0
    while offset < len(code):
        instr = decode_at(code, offset)
        yield instr
        offset += instr.size


def instruction_offsets(code: bytes) -> List[int]:
    return [d.offset for d in decode(code)]


def disassemble(code: bytes) -> str:
    return "\n".join(d.render() for d in decode(code))


def assemble(listing: str) -> bytes:
    """Inverse of `disassemble`; offsets in the listing are checked, not trusted"""
    out = bytearray()
    for number, line in enumerate(listing.splitlines(), 1):
        fields = line.split()
        if not fields:
            continue
        if fields[0].startswith("0x"):
            stated = int(fields[0], 16)
            if stated != len(out):
                raise BackendError(f"line {number}: offset 0x{stated:04x} but assembled 0x{len(out):04x}")
            fields = fields[1:]
        name, args = fields[0].upper(), [int(a, 0) for a in fields[1:]]
        if name == "INVALID":
            out.append(args[0])
        elif name in BY_NAME:
            out += encode(name, *args)
        else:
            raise BackendError(f"line {number}: unknown mnemonic {fields[0]}")
    return bytes(out)
