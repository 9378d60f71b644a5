"""
Instruction set - one-byte opcodes with fixed-width big-endian immediates
"""

from dataclasses import dataclass
from typing import Dict, Tuple

from model.errors import UnencodableConstant


@dataclass(frozen=True)
class OpSpec:
    """
    Attributes:
        name: mnemonic
        code: opcode byte
        immediates: byte width of each immediate, in order
    """
    name: str
    code: int
    immediates: Tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return 1 + sum(self.immediates)


OPCODES = [
    OpSpec("STOP", 0x00),
    OpSpec("ADD", 0x01),
    OpSpec("MUL", 0x02),
    OpSpec("SUB", 0x03),
    OpSpec("DIV", 0x04),
    OpSpec("MOD", 0x06),
    OpSpec("LT", 0x10),
    OpSpec("GT", 0x11),
    OpSpec("LE", 0x12),
    OpSpec("GE", 0x13),
    OpSpec("EQ", 0x14),
    OpSpec("ISZERO", 0x15),
    OpSpec("AND", 0x16),
    OpSpec("OR", 0x17),
    OpSpec("XOR", 0x18),
    OpSpec("NOT", 0x19),
    OpSpec("NE", 0x1a),
    OpSpec("SHL", 0x1b),
    OpSpec("SHR", 0x1c),
    OpSpec("CALLER", 0x33),
    OpSpec("POP", 0x50),
    OpSpec("SLOAD", 0x54, (2,)),
    OpSpec("SSTORE", 0x55, (2,)),
    OpSpec("JUMP", 0x56),
    OpSpec("JUMPI", 0x57),
    OpSpec("JUMPDEST", 0x5b),
    OpSpec("SLOADK", 0x5c, (2,)),
    OpSpec("SSTOREK", 0x5d, (2,)),
    OpSpec("PUSH", 0x60, (8,)),
    OpSpec("DUP", 0x80, (1,)),
    OpSpec("SWAP", 0x90, (1,)),
    OpSpec("LOG", 0xa0, (2, 1)),
    OpSpec("ZKCONST", 0xe0, (4,)),
    OpSpec("RETURN", 0xf3),
    OpSpec("REVERT", 0xfd, (2,)),
]

BY_NAME: Dict[str, OpSpec] = {op.name: op for op in OPCODES}
BY_CODE: Dict[int, OpSpec] = {op.code: op for op in OPCODES}

# IR operation -> mnemonic
BINOP_MNEMONICS = {
    "add": "ADD", "sub": "SUB", "mul": "MUL", "div": "DIV", "mod": "MOD",
    "and": "AND", "or": "OR", "xor": "XOR", "shl": "SHL", "shr": "SHR",
}
CMP_MNEMONICS = {"eq": "EQ", "ne": "NE", "lt": "LT", "gt": "GT", "le": "LE", "ge": "GE"}
MNEMONIC_OPS = {v: k for k, v in {**BINOP_MNEMONICS, **CMP_MNEMONICS}.items()}

MAX_STACK_REACH = 255


def encode(name: str, *immediates: int) -> bytes:
    spec = BY_NAME[name]
    if len(immediates) != len(spec.immediates):
        raise ValueError(f"{name} takes {len(spec.immediates)} immediate(s), got {len(immediates)}")
    out = bytearray([spec.code])
    for value, width in zip(immediates, spec.immediates):
        if value < 0 or value >= 1 << (8 * width):
            raise UnencodableConstant(f"{name} immediate {value} does not fit in {width} byte(s)")
        out += value.to_bytes(width, "big")
    return bytes(out)
