"""
SSA checker - independent well-formedness verification

Run after lowering and after every optimizer pass.
"""

from typing import Dict, List

import networkx as nx

from lowering.ir import IrFunction, IrModule
from model.errors import IrError


def block_graph(fn: IrFunction) -> nx.DiGraph:
    graph = nx.DiGraph()
    for block in fn.blocks:
        graph.add_node(block.label)
        for succ in block.successors:
            graph.add_edge(block.label, succ)
    return graph


def dominates(idom: Dict[str, str], a: str, b: str) -> bool:
    """True when block a dominates block b"""
    while True:
        if a == b:
            return True
        parent = idom.get(b)
        if parent is None or parent == b:
            return False
        b = parent


def check_function(fn: IrFunction, seen_ids: set) -> List[str]:
    problems: List[str] = []
    if not fn.blocks:
        return [f"{fn.key}: no blocks"]
    labels = [b.label for b in fn.blocks]
    if len(set(labels)) != len(labels):
        problems.append(f"{fn.key}: duplicate block labels")
    blocks = fn.block_map()

    where: Dict[int, tuple] = {}
    for block in fn.blocks:
        if not block.instrs or not block.instrs[-1].is_terminator:
            problems.append(f"{fn.key}/{block.label}: block does not end in a terminator")
        seen_body = False
        for position, instr in enumerate(block.instrs):
            if instr.ir_id in seen_ids:
                problems.append(f"{fn.key}: ir_id {instr.ir_id} defined twice")
            seen_ids.add(instr.ir_id)
            where[instr.ir_id] = (block.label, position, instr)
            if instr.is_terminator and position != len(block.instrs) - 1:
                problems.append(f"{fn.key}/{block.label}: terminator %{instr.ir_id} is not last")
            if instr.is_phi and seen_body:
                problems.append(f"{fn.key}/{block.label}: phi %{instr.ir_id} after a non-phi")
            if not instr.is_phi:
                seen_body = True
            for target in instr.targets:
                if target not in blocks:
                    problems.append(f"{fn.key}: %{instr.ir_id} jumps to unknown block {target}")
    if problems:
        return problems

    preds = fn.predecessors()
    if preds[fn.entry.label]:
        problems.append(f"{fn.key}: entry block has predecessors")

    graph = block_graph(fn)
    idom = nx.immediate_dominators(graph, fn.entry.label)
    reachable = set(idom) | {fn.entry.label}

    for block in fn.blocks:
        for position, instr in enumerate(block.instrs):
            if instr.is_phi:
                incoming_labels = sorted(lbl for lbl, _ in instr.incoming)
                if block.label in reachable and incoming_labels != sorted(preds[block.label]):
                    problems.append(f"{fn.key}/{block.label}: phi %{instr.ir_id} incoming {incoming_labels} "
                                    f"!= predecessors {sorted(preds[block.label])}")
                for pred, value in instr.incoming:
                    if value not in where:
                        problems.append(f"{fn.key}: phi %{instr.ir_id} uses undefined %{value}")
                    elif pred in reachable and not dominates(idom, where[value][0], pred):
                        problems.append(f"{fn.key}: phi %{instr.ir_id} operand %{value} does not dominate {pred}")
                continue
            for value in instr.args:
                if value not in where:
                    problems.append(f"{fn.key}: %{instr.ir_id} uses undefined %{value}")
                    continue
                def_block, def_pos, definition = where[value]
                if not definition.defines_value:
                    problems.append(f"{fn.key}: %{instr.ir_id} uses %{value} which defines no value")
                elif def_block == block.label:
                    if def_pos >= position:
                        problems.append(f"{fn.key}: %{instr.ir_id} uses %{value} before its definition")
                elif block.label in reachable and not dominates(idom, def_block, block.label):
                    problems.append(f"{fn.key}: definition of %{value} does not dominate its use in "
                                    f"%{instr.ir_id}")
    return problems


def verify_module(module: IrModule, stage: str = "") -> IrModule:
    """Raise IrError listing every violation"""
    seen: set = set()
    problems: List[str] = []
    for fn in module.functions.values():
        problems.extend(check_function(fn, seen))
    for instr in module.instructions():
        if instr.ir_id >= module.next_id:
            problems.append(f"ir_id {instr.ir_id} outside the allocator range")
    if problems:
        where = f" after {stage}" if stage else ""
        raise IrError(f"malformed IR{where}: " + "; ".join(problems[:10]))
    return module
