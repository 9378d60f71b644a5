"""
Dead code elimination - unreachable blocks and unused pure instructions
"""

import logging
from typing import Optional

from lowering.ir import IrFunction, IrModule, collapse_single_phis
from optimizer.context import PassContext

logger = logging.getLogger(__name__)


def _removable(instr) -> bool:
    if instr.has_effect:
        return False
    if instr.opcode == "param":
        # real parameters occupy frame slots; msg.sender reads can go
        return "env" in instr.attrs
    return True


def dce_function(fn: IrFunction) -> int:
    removed = len(fn.remove_unreachable())
    removed += len(collapse_single_phis(fn))
    changed = True
    while changed:
        changed = False
        used = {v for instr in fn.instructions() for v in instr.uses}
        for block in fn.blocks:
            keep = [i for i in block.instrs if i.ir_id in used or not _removable(i)]
            if len(keep) != len(block.instrs):
                removed += len(block.instrs) - len(keep)
                block.instrs = keep
                changed = True
    return removed


def pass_dce(module: IrModule, ctx: Optional[PassContext] = None) -> IrModule:
    total = sum(dce_function(fn) for fn in module.functions.values())
    logger.debug("[OPTIMIZER] dce: %d block(s)/instruction(s) removed", total)
    return module
