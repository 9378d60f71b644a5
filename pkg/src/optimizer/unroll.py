"""
Full unrolling of counted loops

Shape: the header has exactly two predecessors (preheader and latch), holds
an induction phi `i` fed by a constant and by `i + c2`, and branches on
`i < c1`. Every copy keeps its original spans; a last copy of the header
performs the final failing test and jumps to the exit.
"""

import logging
from typing import Dict, List, Optional, Set

import networkx as nx

from lowering.ir import BasicBlock, IrFunction, IrInstr, IrModule, replace_uses
from lowering.ssa_check import block_graph, dominates
from model.words import MASK
from optimizer.context import PassContext, clone_blocks, rename_incoming

logger = logging.getLogger(__name__)


class LoopShape:
    def __init__(self, header: BasicBlock, preheader: str, latch: str, body: Set[str], trips: int):
        self.header = header
        self.preheader = preheader
        self.latch = latch
        self.body = body
        self.trips = trips


def _revert_only(block: BasicBlock) -> bool:
    return len(block.instrs) == 1 and block.instrs[0].opcode == "revert"


def _trip_count(c0: int, c1: int, c2: int, limit: int) -> Optional[int]:
    trips, i = 0, c0
    while i < c1:
        trips += 1
        if trips > limit:
            return None
        i = (i + c2) & MASK
    return trips


def _const_value(defs: Dict[int, IrInstr], value: int) -> Optional[int]:
    instr = defs.get(value)
    return instr.attrs["value"] if instr is not None and instr.opcode == "const" else None


def find_loop(fn: IrFunction, limit: int) -> Optional[LoopShape]:
    graph = block_graph(fn)
    idom = nx.immediate_dominators(graph, fn.entry.label)
    blocks = fn.block_map()
    preds = fn.predecessors()
    defs = fn.definitions()

    for header in fn.blocks:
        term = header.terminator
        if term is None or term.opcode != "branch" or term.attrs.get("loop") != "for":
            continue
        hp = preds[header.label]
        if len(hp) != 2:
            continue
        latches = [p for p in hp if p in idom and dominates(idom, header.label, p)]
        if len(latches) != 1:
            continue
        latch = latches[0]
        preheader = hp[0] if hp[1] == latch else hp[1]
        if blocks[latch].terminator.opcode != "jump":
            continue

        cond = defs.get(term.args[0])
        if cond is None or cond.opcode != "cmp" or cond.op != "lt" or cond not in header.instrs:
            continue
        phi = defs.get(cond.args[0])
        c1 = _const_value(defs, cond.args[1])
        if phi is None or not phi.is_phi or phi not in header.instrs or c1 is None:
            continue
        incoming = dict(phi.incoming)
        c0 = _const_value(defs, incoming.get(preheader))
        step = defs.get(incoming.get(latch))
        if c0 is None or step is None or step.opcode != "binop" or step.op != "add":
            continue
        if step.args[0] == phi.ir_id:
            c2 = _const_value(defs, step.args[1])
        elif step.args[1] == phi.ir_id:
            c2 = _const_value(defs, step.args[0])
        else:
            continue
        if not c2:
            continue
        trips = _trip_count(c0, c1, c2, limit)
        if trips is None:
            continue

        inner = graph.subgraph([n for n in graph.nodes if n != header.label])
        body = {latch} | set(nx.ancestors(inner, latch))
        body = {b for b in body if b in idom and dominates(idom, header.label, b)}
        body.add(header.label)

        exit_label = term.targets[1]
        if exit_label in body or term.targets[0] not in body:
            continue
        clean = True
        for label in body:
            for succ in blocks[label].successors:
                if succ in body:
                    continue
                if label == header.label and succ == exit_label:
                    continue
                if not _revert_only(blocks[succ]):
                    clean = False
        if not clean:
            continue
        return LoopShape(header, preheader, latch, body, trips)
    return None


def unroll_loop(module: IrModule, fn: IrFunction, loop: LoopShape):
    header = loop.header
    term = header.terminator
    body_target, exit_label = term.targets
    ordered = [b for b in fn.blocks if b.label in loop.body]
    phis = header.phis

    # value of every header phi on entry to the copy being built
    entering: Dict[int, int] = {phi.ir_id: dict(phi.incoming)[loop.preheader] for phi in phis}
    copies_all: List[BasicBlock] = []
    previous_latch: Optional[BasicBlock] = None
    previous_header_label: Optional[str] = None
    final_values: Dict[int, int] = {}

    for k in range(loop.trips + 1):
        last = k == loop.trips
        group = [header] if last else ordered
        values: Dict[int, int] = dict(entering)
        copies = clone_blocks(module, fn, group, values, "unr", skip=lambda i: i.ir_id in entering)
        by_origin = dict(zip([b.label for b in group], copies))
        head_copy = by_origin[header.label]
        head_term = head_copy.terminator
        head_term.opcode = "jump"
        head_term.args = []
        head_term.targets = [exit_label] if last else [by_origin[body_target].label]

        if previous_latch is not None:
            previous_latch.terminator.targets = [head_copy.label]
        else:
            fn.block(loop.preheader).terminator.targets = [
                head_copy.label if t == header.label else t for t in fn.block(loop.preheader).terminator.targets]

        if not last:
            latch_copy = by_origin[loop.latch]
            entering = {phi.ir_id: values.get(dict(phi.incoming)[loop.latch], dict(phi.incoming)[loop.latch])
                        for phi in phis}
            previous_latch = latch_copy
        else:
            final_values = values
            previous_header_label = head_copy.label
        copies_all.extend(copies)

    # code after the loop sees the values of the final header copy
    originals = {i.ir_id for b in ordered for i in b.instrs}
    at = fn.blocks.index(ordered[0])
    fn.blocks = [b for b in fn.blocks if b.label not in loop.body]
    fn.blocks[at:at] = copies_all
    for old in originals:
        if old in final_values:
            replace_uses(fn, old, final_values[old])
    rename_incoming(fn, [exit_label], header.label, previous_header_label)


def pass_unroll(module: IrModule, ctx: Optional[PassContext] = None) -> IrModule:
    ctx = ctx or PassContext()
    limit = ctx.config.unroll_max_trips
    count = 0
    for fn in module.functions.values():
        while True:
            loop = find_loop(fn, limit)
            if loop is None:
                break
            unroll_loop(module, fn, loop)
            count += 1
    logger.debug("[OPTIMIZER] unroll: %d loop(s) unrolled", count)
    return module
