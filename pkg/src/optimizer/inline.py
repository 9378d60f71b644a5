"""
Inlining of small internal callees

Inlined instructions keep the callee span and gain the call site in their
inline chain. Returns become jumps to the continuation; a phi collects the
returned value when there is more than one return.
"""

import logging
from typing import Dict, Optional, Set

from lowering.ir import (BasicBlock, IrFunction, IrInstr, IrModule, call_graph, recursive_functions,
                         replace_uses)
from model.provenance import Confidence, Provenance
from model.table import JumpType
from optimizer.context import PassContext, clone_blocks, rename_incoming

logger = logging.getLogger(__name__)


def _size(fn: IrFunction) -> int:
    return sum(len(b.instrs) for b in fn.blocks)


class Inliner:
    def __init__(self, module: IrModule, ctx: PassContext):
        self.module = module
        self.ctx = ctx
        self.limit = ctx.config.inline_max_instrs

    def _candidate(self, recursive: Set[str], instr: IrInstr) -> Optional[IrFunction]:
        callee = self.module.functions.get(instr.attrs["callee"])
        if callee is None or _size(callee) > self.limit:
            return None
        # recursive functions (direct or through others) are never inlined
        if callee.key in recursive:
            return None
        return callee

    def run(self) -> int:
        inlined = 0
        progress = True
        while progress:
            progress = False
            recursive = recursive_functions(call_graph(self.module))
            for fn in self.module.functions.values():
                for block in fn.blocks:
                    for position, instr in enumerate(block.instrs):
                        if instr.opcode != "call":
                            continue
                        callee = self._candidate(recursive, instr)
                        if callee is not None:
                            self._inline(fn, block, position, instr, callee)
                            inlined += 1
                            progress = True
                            break
                    if progress:
                        break
                if progress:
                    break
        self._drop_uncalled()
        return inlined

    def _inline(self, fn: IrFunction, block: BasicBlock, position: int, call: IrInstr, callee: IrFunction):
        module = self.module
        call_prov = call.provenance
        call_span = call_prov.primary_span

        # split the caller block around the call
        cont = BasicBlock(fn.new_label("inl"))
        cont.instrs = block.instrs[position + 1:]
        block.instrs = block.instrs[:position]
        rename_incoming(fn, cont.successors, block.label, cont.label)

        values: Dict[int, int] = {}
        for instr in callee.entry.instrs:
            if instr.opcode == "param" and "env" not in instr.attrs:
                values[instr.ir_id] = call.args[instr.attrs["index"]]

        def provenance_of(instr: IrInstr) -> Provenance:
            if not self.ctx.mapping or instr.provenance.primary_span is None or call_span is None:
                return instr.provenance
            return instr.provenance.with_call_site(call_span, call_prov.inline_chain)

        copies = clone_blocks(module, fn, callee.blocks, values, "inl", provenance_of,
                              skip=lambda i: i.ir_id in values)

        returns = []
        for copy in copies:
            term = copy.terminator
            if term is not None and term.opcode == "return":
                if term.args:
                    returns.append((copy.label, term.args[0]))
                term.opcode = "jump"
                term.args = []
                term.targets = [cont.label]
                term.jump = JumpType.REGULAR

        block.instrs.append(IrInstr(module.new_id(), "jump", targets=[copies[0].label],
                                    provenance=call_prov, modifier_depth=call.modifier_depth,
                                    statement=call.statement))

        at = fn.blocks.index(block) + 1
        fn.blocks[at:at] = copies + [cont]

        if call.attrs.get("returns") and returns:
            if len(returns) == 1:
                result = returns[0][1]
            else:
                prov = (Provenance(call_span, Confidence.APPROXIMATE, call_prov.inline_chain,
                                   statement_id=call_prov.statement_id) if self.ctx.mapping else call_prov)
                phi = IrInstr(module.new_id(), "phi", incoming=list(returns), provenance=prov,
                              modifier_depth=call.modifier_depth, statement=call.statement)
                cont.instrs.insert(0, phi)
                result = phi.ir_id
            replace_uses(fn, call.ir_id, result)

        fn.remove_unreachable()
        logger.debug("[OPTIMIZER] inlined %s into %s", callee.key, fn.key)

    def _drop_uncalled(self):
        called = {i.attrs["callee"] for i in self.module.instructions() if i.opcode == "call"}
        for key, fn in list(self.module.functions.items()):
            if fn.visibility == "internal" and key not in called:
                del self.module.functions[key]
                logger.debug("[OPTIMIZER] dropped uncalled internal function %s", key)


def pass_inline(module: IrModule, ctx: Optional[PassContext] = None) -> IrModule:
    ctx = ctx or PassContext()
    count = Inliner(module, ctx).run()
    logger.debug("[OPTIMIZER] inline: %d call(s) inlined", count)
    return module
