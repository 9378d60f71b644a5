"""
Pass context - what every pass needs besides the module
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional

from lowering.ir import BasicBlock, IrFunction, IrInstr, IrModule
from model.provenance import Confidence, Provenance, merge_provenance
from model.span import SourceSpan
from optimizer.config import PassConfig


@dataclass
class PassContext:
    """
    Attributes:
        config: the pipeline configuration
        registered: spans a merged provenance may widen to
        moved / downgraded: counters the current pass adds to
    """
    config: PassConfig = field(default_factory=PassConfig.none)
    registered: FrozenSet[SourceSpan] = frozenset()
    moved: int = 0
    downgraded: int = 0

    @property
    def mapping(self) -> bool:
        return self.config.mapping_enabled

    def merge(self, a: Provenance, b: Provenance) -> Provenance:
        if not self.mapping:
            return a
        merged = merge_provenance(a, b, self.registered)
        if merged.confidence == Confidence.APPROXIMATE and min(a.confidence, b.confidence) == Confidence.EXACT:
            self.downgraded += 1
        return merged


def clone_instr(module: IrModule, instr: IrInstr, values: Dict[int, int], labels: Dict[str, str],
                provenance: Optional[Provenance] = None) -> IrInstr:
    """Copy with a fresh id; operands and targets go through the maps"""
    copy = IrInstr(module.new_id(), instr.opcode,
                   [values.get(a, a) for a in instr.args],
                   [labels.get(t, t) for t in instr.targets],
                   [(labels.get(lbl, lbl), values.get(v, v)) for lbl, v in instr.incoming],
                   dict(instr.attrs),
                   provenance if provenance is not None else instr.provenance,
                   instr.jump, instr.modifier_depth, instr.statement)
    values[instr.ir_id] = copy.ir_id
    return copy


def clone_blocks(module: IrModule, fn: IrFunction, blocks: Iterable[BasicBlock], values: Dict[int, int],
                 hint: str, provenance_of=None, skip=None) -> List[BasicBlock]:
    """
    Copy a group of blocks; branches between them are rewired to the copies

    `values` maps original ids to replacements and is extended with the new
    ids. Operands defined later in the group are patched in a second sweep.
    Instructions matching `skip` are left out and keep their mapping.
    """
    blocks = list(blocks)
    labels = {b.label: fn.new_label(hint) for b in blocks}
    copies = []
    for block in blocks:
        new_block = BasicBlock(labels[block.label])
        for instr in block.instrs:
            if skip is not None and skip(instr):
                continue
            prov = provenance_of(instr) if provenance_of is not None else None
            new_block.instrs.append(clone_instr(module, instr, values, labels, prov))
        copies.append(new_block)
    for block in copies:
        for instr in block.instrs:
            instr.args = [values.get(a, a) for a in instr.args]
            instr.incoming = [(lbl, values.get(v, v)) for lbl, v in instr.incoming]
    return copies


def retarget(instr: IrInstr, old: str, new: str):
    instr.targets = [new if t == old else t for t in instr.targets]


def rename_incoming(fn: IrFunction, successor_labels: Iterable[str], old: str, new: str):
    """Phis in the given successors now receive the edge from `new` instead of `old`"""
    blocks = fn.block_map()
    for label in successor_labels:
        block = blocks.get(label)
        if block is None:
            continue
        for phi in block.phis:
            phi.incoming = [(new if lbl == old else lbl, v) for lbl, v in phi.incoming]
