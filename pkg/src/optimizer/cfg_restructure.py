"""
Control-flow restructuring

Threads jumps through forwarding blocks, merges single-predecessor /
single-successor chains, lays blocks out in reverse post-order and keeps the
dominator tree on the module for the structural validator.
"""

import logging
from typing import Optional

import networkx as nx

from lowering.ir import IrFunction, IrModule, collapse_single_phis, replace_uses
from lowering.ssa_check import block_graph
from optimizer.context import PassContext, rename_incoming, retarget

logger = logging.getLogger(__name__)


def _thread_once(fn: IrFunction) -> bool:
    preds = fn.predecessors()
    blocks = fn.block_map()
    for block in fn.blocks[1:]:
        if len(block.instrs) != 1 or block.instrs[0].opcode != "jump":
            continue
        target = block.instrs[0].targets[0]
        if target == block.label:
            continue
        target_block = blocks[target]
        sources = preds[block.label]
        if not sources:
            continue
        if target_block.phis and any(src in preds[target] for src in sources):
            continue
        if target_block.phis and len(sources) > 1:
            # each source needs its own incoming value
            for phi in target_block.phis:
                value = dict(phi.incoming)[block.label]
                phi.incoming = [(lbl, v) for lbl, v in phi.incoming if lbl != block.label]
                phi.incoming.extend((src, value) for src in sources)
        else:
            for src in sources:
                rename_incoming(fn, [target], block.label, src)
        for src in sources:
            term = blocks[src].terminator
            retarget(term, block.label, target)
            if term.opcode == "branch" and term.targets[0] == term.targets[1]:
                # both arms now meet: the condition no longer matters
                term.opcode, term.args, term.targets = "jump", [], [target]
        fn.blocks.remove(block)
        return True
    return False


def _merge_once(fn: IrFunction) -> bool:
    preds = fn.predecessors()
    blocks = fn.block_map()
    for block in fn.blocks:
        term = block.terminator
        if term is None or term.opcode != "jump":
            continue
        succ = blocks[term.targets[0]]
        if succ is block or succ is fn.entry or preds[succ.label] != [block.label]:
            continue
        for phi in succ.phis:
            replace_uses(fn, phi.ir_id, phi.incoming[0][1])
        block.instrs = block.instrs[:-1] + succ.body
        rename_incoming(fn, block.successors, succ.label, block.label)
        fn.blocks.remove(succ)
        return True
    return False


def _rpo_layout(fn: IrFunction):
    graph = block_graph(fn)
    order = list(reversed(list(nx.dfs_postorder_nodes(graph, fn.entry.label))))
    blocks = fn.block_map()
    fn.blocks = [blocks[label] for label in order]


def restructure_function(fn: IrFunction) -> int:
    changes = 0
    fn.remove_unreachable()
    while _thread_once(fn) or _merge_once(fn):
        changes += 1
    fn.remove_unreachable()
    collapse_single_phis(fn)
    _rpo_layout(fn)
    return changes


def dominator_tree(fn: IrFunction) -> dict:
    return dict(nx.immediate_dominators(block_graph(fn), fn.entry.label))


def pass_cfg_restructure(module: IrModule, ctx: Optional[PassContext] = None) -> IrModule:
    changes = 0
    for fn in module.functions.values():
        changes += restructure_function(fn)
        module.dominators[fn.key] = dominator_tree(fn)
    logger.debug("[OPTIMIZER] cfg_restructure: %d rewrite(s)", changes)
    return module
