"""
zk instrumentation - constraint gadgets

Require-derived branches get a mapped constraint carrying the require span;
bitwise operations get a synthetic gadget that stays out of the source map.
Gadget indices continue after the last require index of the contract.
"""

import logging
from typing import Dict, Optional

from lowering.ir import IrInstr, IrModule
from model.provenance import Provenance
from model.words import BITWISE
from optimizer.context import PassContext

logger = logging.getLogger(__name__)


def pass_zk_instrument(module: IrModule, ctx: Optional[PassContext] = None) -> IrModule:
    ctx = ctx or PassContext()
    next_gadget: Dict[str, int] = {}
    for fn in module.functions.values():
        for instr in fn.instructions():
            index = instr.attrs.get("constraint") if instr.opcode == "branch" else None
            if index is not None:
                next_gadget[fn.contract] = max(next_gadget.get(fn.contract, 0), index)

    inserted = 0
    for fn in module.functions.values():
        for block in fn.blocks:
            out = []
            for instr in block.instrs:
                if instr.opcode == "branch" and instr.attrs.get("origin") == "require" \
                        and "constraint" in instr.attrs:
                    index = instr.attrs["constraint"]
                    prov = instr.provenance.with_constraint(index) if ctx.mapping else Provenance()
                    out.append(IrInstr(module.new_id(), "zk_constraint", args=list(instr.args),
                                       attrs={"constraint": index, "kind": "require"},
                                       provenance=prov, modifier_depth=instr.modifier_depth,
                                       statement=instr.statement))
                    inserted += 1
                out.append(instr)
                if instr.opcode == "binop" and instr.op in BITWISE:
                    index = next_gadget.get(fn.contract, 0) + 1
                    next_gadget[fn.contract] = index
                    prov = Provenance.synthetic(index) if ctx.mapping else Provenance()
                    out.append(IrInstr(module.new_id(), "zk_constraint", args=[instr.ir_id],
                                       attrs={"constraint": index, "kind": "gadget"},
                                       provenance=prov, modifier_depth=instr.modifier_depth,
                                       statement=instr.statement))
                    inserted += 1
            block.instrs = out
    logger.debug("[OPTIMIZER] zk_instrument: %d constraint(s) inserted", inserted)
    return module
