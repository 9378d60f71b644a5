"""
Word arithmetic - 64-bit unsigned, wrapping add/sub/mul
"""

WORD_BITS = 64
MASK = (1 << WORD_BITS) - 1

BINOPS = ("add", "sub", "mul", "div", "mod", "and", "or", "xor", "shl", "shr")
BITWISE = ("and", "or", "xor", "shl", "shr")
CMPS = ("eq", "ne", "lt", "gt", "le", "ge")

DIV_BY_ZERO = "division by zero"

# source operator -> IR operation
SOURCE_BINOPS = {
    "+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod",
    "&": "and", "|": "or", "^": "xor", "<<": "shl", ">>": "shr",
}
SOURCE_CMPS = {"==": "eq", "!=": "ne", "<": "lt", ">": "gt", "<=": "le", ">=": "ge"}


def wrap(value: int) -> int:
    return value & MASK


def apply_binop(op: str, a: int, b: int) -> int:
    """Division and modulo by zero yield 0; callers guard them with a revert path"""
    if op == "add":
        return (a + b) & MASK
    if op == "sub":
        return (a - b) & MASK
    if op == "mul":
        return (a * b) & MASK
    if op == "div":
        return a // b if b else 0
    if op == "mod":
        return a % b if b else 0
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return (a << b) & MASK if b < WORD_BITS else 0
    if op == "shr":
        return a >> b if b < WORD_BITS else 0
    raise ValueError(f"Unknown binary operation: {op}")


def apply_cmp(op: str, a: int, b: int) -> int:
    if op == "eq":
        return int(a == b)
    if op == "ne":
        return int(a != b)
    if op == "lt":
        return int(a < b)
    if op == "gt":
        return int(a > b)
    if op == "le":
        return int(a <= b)
    if op == "ge":
        return int(a >= b)
    raise ValueError(f"Unknown comparison: {op}")
