"""
Constant folding and algebraic identity reduction

A folded instruction is replaced by a new `const` whose provenance merges
the operator with its operands; identities forward the surviving operand.
"""

import logging
from typing import Dict, Optional

from lowering.ir import IrFunction, IrInstr, IrModule, replace_uses
from model.words import apply_binop, apply_cmp
from optimizer.context import PassContext

logger = logging.getLogger(__name__)


def _const(defs: Dict[int, IrInstr], value_id: int) -> Optional[int]:
    instr = defs.get(value_id)
    if instr is not None and instr.opcode == "const":
        return instr.attrs["value"]
    return None


def _identity(instr: IrInstr, defs: Dict[int, IrInstr]):
    """
    Returns ("value", id) when the result equals an operand, ("zero", const id)
    when it is the constant zero operand, or None
    """
    a, b = instr.args
    ca, cb = _const(defs, a), _const(defs, b)
    op = instr.op
    if op in ("add", "or", "xor"):
        if cb == 0:
            return "value", a
        if ca == 0:
            return "value", b
    if op in ("sub", "shl", "shr") and cb == 0:
        return "value", a
    if op == "mul":
        if cb == 1:
            return "value", a
        if ca == 1:
            return "value", b
        if cb == 0:
            return "zero", b
        if ca == 0:
            return "zero", a
    if op in ("and", "or") and a == b:
        return "value", a
    return None


def fold_function(module: IrModule, fn: IrFunction, ctx: PassContext) -> int:
    folded = 0
    changed = True
    while changed:
        changed = False
        defs = fn.definitions()
        for block in fn.blocks:
            for position, instr in enumerate(block.instrs):
                if instr.opcode not in ("binop", "cmp", "not"):
                    continue
                values = [_const(defs, a) for a in instr.args]
                replacement = None
                if all(v is not None for v in values):
                    if instr.opcode == "not":
                        result = int(not values[0])
                        provenance = ctx.merge(instr.provenance, defs[instr.args[0]].provenance)
                    else:
                        fold = apply_binop if instr.opcode == "binop" else apply_cmp
                        result = fold(instr.op, values[0], values[1])
                        operands = ctx.merge(defs[instr.args[0]].provenance, defs[instr.args[1]].provenance)
                        provenance = ctx.merge(instr.provenance, operands)
                    const = IrInstr(module.new_id(), "const", attrs={"value": result}, provenance=provenance,
                                    modifier_depth=instr.modifier_depth, statement=instr.statement)
                    block.instrs[position] = const
                    replacement = const.ir_id
                elif instr.opcode == "binop":
                    identity = _identity(instr, defs)
                    if identity is not None:
                        kind, value = identity
                        if kind == "zero":
                            const = IrInstr(module.new_id(), "const", attrs={"value": 0},
                                            provenance=ctx.merge(instr.provenance, defs[value].provenance),
                                            modifier_depth=instr.modifier_depth, statement=instr.statement)
                            block.instrs[position] = const
                            replacement = const.ir_id
                        else:
                            del block.instrs[position]
                            replacement = value
                if replacement is not None:
                    replace_uses(fn, instr.ir_id, replacement)
                    folded += 1
                    changed = True
                    break
            if changed:
                break
    return folded


def pass_const_fold(module: IrModule, ctx: Optional[PassContext] = None) -> IrModule:
    ctx = ctx or PassContext()
    total = sum(fold_function(module, fn, ctx) for fn in module.functions.values())
    logger.debug("[OPTIMIZER] const_fold: %d instruction(s) simplified", total)
    return module
