"""
Instruction reordering - sink pure instructions to their first use

Only const/binop/cmp/not move, only inside their block, and never past an
instruction of another statement. Provenance is left alone: the ir_id is the
tag that survives the motion.
"""

import logging
from typing import Dict, List, Optional

from lowering.ir import PURE_OPCODES, BasicBlock, IrInstr, IrModule
from optimizer.context import PassContext

logger = logging.getLogger(__name__)


def _stays_in_statement(instrs: List[IrInstr], start: int, use: int) -> bool:
    statement = instrs[start].statement
    return statement is not None and all(i.statement == statement for i in instrs[start + 1:use])


def reorder_block(block: BasicBlock) -> int:
    instrs = block.instrs
    position = {i.ir_id: n for n, i in enumerate(instrs)}
    first_use: Dict[int, int] = {}
    for n, instr in enumerate(instrs):
        if instr.is_phi:
            continue
        for arg in instr.args:
            if arg in position and arg not in first_use:
                first_use[arg] = n
    movable = {i.ir_id for i in instrs if i.opcode in PURE_OPCODES and i.ir_id in first_use
               and _stays_in_statement(instrs, position[i.ir_id], first_use[i.ir_id])}
    by_user: Dict[int, List[IrInstr]] = {}
    for instr in instrs:
        if instr.ir_id in movable:
            by_user.setdefault(first_use[instr.ir_id], []).append(instr)

    placed = set()
    out: List[IrInstr] = []

    def place(instr: IrInstr):
        if instr.ir_id in placed:
            return
        placed.add(instr.ir_id)
        for arg in instr.args:
            if arg in movable and arg not in placed:
                place(instrs[position[arg]])
        out.append(instr)

    for n, instr in enumerate(instrs):
        if instr.ir_id in movable:
            continue
        for mover in sorted(by_user.get(n, []), key=lambda i: i.ir_id):
            place(mover)
        place(instr)

    moved = sum(1 for a, b in zip(instrs, out) if a is not b)
    block.instrs = out
    return moved


def pass_reorder(module: IrModule, ctx: Optional[PassContext] = None) -> IrModule:
    moved = 0
    for fn in module.functions.values():
        for block in fn.blocks:
            moved += reorder_block(block)
    if ctx is not None:
        ctx.moved += moved
    logger.debug("[OPTIMIZER] reorder: %d instruction(s) moved", moved)
    return module
