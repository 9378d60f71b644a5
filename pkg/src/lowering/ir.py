"""
SSA IR - provenance-tagged instructions in basic blocks

A value is named by the ir_id of the instruction that defines it. Ids come
from one module-wide counter and are never reused after deletion.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set, Tuple

import networkx as nx

from model.provenance import Provenance
from model.table import JumpType

TERMINATORS = ("jump", "branch", "return", "revert")
VALUE_OPCODES = ("const", "binop", "cmp", "not", "load_state", "load_key", "param", "call", "phi")
EFFECT_OPCODES = ("store_state", "store_key", "call", "emit_event", "zk_constraint") + TERMINATORS
PURE_OPCODES = ("const", "binop", "cmp", "not")


@dataclass(eq=False)
class IrInstr:
    """
    One SSA instruction

    Attributes:
        ir_id: module-unique id; also the name of the value it defines
        opcode: one of the IR opcodes
        args: value operands (ir_ids)
        targets: successor block labels (jump: 1, branch: [true, false])
        incoming: phi operands as (predecessor label, value id)
        attrs: literals such as `value`, `op`, `slot`, `callee`, `message`
        provenance: source origin
        jump: call/return marker carried to the mapping table
        modifier_depth: modifier nesting at this point
        statement: node id of the statement that produced it; set with or
            without mapping, so code layout never depends on the mapping switch
    """
    ir_id: int
    opcode: str
    args: List[int] = field(default_factory=list)
    targets: List[str] = field(default_factory=list)
    incoming: List[Tuple[str, int]] = field(default_factory=list)
    attrs: Dict = field(default_factory=dict)
    provenance: Provenance = field(default_factory=Provenance)
    jump: JumpType = JumpType.REGULAR
    modifier_depth: int = 0
    statement: Optional[int] = None

    @property
    def op(self) -> Optional[str]:
        return self.attrs.get("op")

    @property
    def is_terminator(self) -> bool:
        return self.opcode in TERMINATORS

    @property
    def is_phi(self) -> bool:
        return self.opcode == "phi"

    @property
    def defines_value(self) -> bool:
        if self.opcode == "call":
            return bool(self.attrs.get("returns"))
        return self.opcode in VALUE_OPCODES

    @property
    def has_effect(self) -> bool:
        return self.opcode in EFFECT_OPCODES

    @property
    def uses(self) -> List[int]:
        return list(self.args) + [v for _, v in self.incoming]

    def replace_use(self, old: int, new: int):
        self.args = [new if a == old else a for a in self.args]
        self.incoming = [(label, new if v == old else v) for label, v in self.incoming]

    def __repr__(self):
        return f"IrInstr(%{self.ir_id} {self.opcode})"


@dataclass(eq=False)
class BasicBlock:
    label: str
    instrs: List[IrInstr] = field(default_factory=list)

    @property
    def terminator(self) -> Optional[IrInstr]:
        if self.instrs and self.instrs[-1].is_terminator:
            return self.instrs[-1]
        return None

    @property
    def phis(self) -> List[IrInstr]:
        return [i for i in self.instrs if i.is_phi]

    @property
    def body(self) -> List[IrInstr]:
        return [i for i in self.instrs if not i.is_phi]

    @property
    def successors(self) -> List[str]:
        term = self.terminator
        return list(term.targets) if term is not None else []

    def leading(self) -> Optional[IrInstr]:
        """First non-phi instruction"""
        for instr in self.instrs:
            if not instr.is_phi:
                return instr
        return None

    def __repr__(self):
        return f"BasicBlock({self.label}, {len(self.instrs)} instrs)"


@dataclass(eq=False)
class IrFunction:
    """
    Attributes:
        key: `Contract.name/arity`
        params: parameter names in order
        returns: whether the function yields a value
        visibility: external (dispatch only), internal (call only) or public (both)
        blocks: ordered; blocks[0] is the entry
    """
    key: str
    name: str
    contract: str
    params: List[str] = field(default_factory=list)
    returns: bool = False
    visibility: str = "public"
    blocks: List[BasicBlock] = field(default_factory=list)
    span: Optional[object] = None
    _label_counter: int = 0

    @property
    def entry(self) -> BasicBlock:
        return self.blocks[0]

    @property
    def dispatchable(self) -> bool:
        return self.visibility in ("external", "public")

    @property
    def callable(self) -> bool:
        return self.visibility in ("internal", "public")

    def new_label(self, hint: str = "b") -> str:
        self._label_counter += 1
        return f"{hint}{self._label_counter}"

    def new_block(self, hint: str = "b") -> BasicBlock:
        block = BasicBlock(self.new_label(hint))
        self.blocks.append(block)
        return block

    def block(self, label: str) -> BasicBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def block_map(self) -> Dict[str, BasicBlock]:
        return {b.label: b for b in self.blocks}

    def predecessors(self) -> Dict[str, List[str]]:
        preds: Dict[str, List[str]] = {b.label: [] for b in self.blocks}
        for b in self.blocks:
            for succ in b.successors:
                if succ in preds and b.label not in preds[succ]:
                    preds[succ].append(b.label)
        return preds

    def instructions(self) -> Iterator[IrInstr]:
        for b in self.blocks:
            yield from b.instrs

    def definitions(self) -> Dict[int, IrInstr]:
        return {i.ir_id: i for i in self.instructions()}

    def remove_unreachable(self) -> List[BasicBlock]:
        """Drop blocks not reachable from the entry and prune their phi edges"""
        seen = set()
        stack = [self.entry.label]
        blocks = self.block_map()
        while stack:
            label = stack.pop()
            if label in seen:
                continue
            seen.add(label)
            stack.extend(s for s in blocks[label].successors if s in blocks)
        dead = [b for b in self.blocks if b.label not in seen]
        if dead:
            self.blocks = [b for b in self.blocks if b.label in seen]
            for b in self.blocks:
                for phi in b.phis:
                    phi.incoming = [(lbl, v) for lbl, v in phi.incoming if lbl in seen]
        return dead


@dataclass(eq=False)
class IrModule:
    """
    Attributes:
        functions: key -> function, in declaration order
        strings: revert-message table
        events: event names in declaration order
        storage_layout: storage name -> slot
        initial_storage: slot -> constant initial value
        dominators: function key -> immediate dominator map, kept by cfg_restructure
    """
    functions: Dict[str, IrFunction] = field(default_factory=dict)
    strings: List[str] = field(default_factory=list)
    events: List[str] = field(default_factory=list)
    storage_layout: Dict[str, int] = field(default_factory=dict)
    initial_storage: Dict[int, int] = field(default_factory=dict)
    dominators: Dict[str, Dict[str, str]] = field(default_factory=dict)
    next_id: int = 0

    def new_id(self) -> int:
        ir_id = self.next_id
        self.next_id += 1
        return ir_id

    def intern_string(self, text: str) -> int:
        if text not in self.strings:
            self.strings.append(text)
        return self.strings.index(text)

    def instructions(self) -> Iterator[IrInstr]:
        for fn in self.functions.values():
            yield from fn.instructions()

    def instruction_index(self) -> Dict[int, IrInstr]:
        return {i.ir_id: i for i in self.instructions()}

    def owner_of(self, ir_id: int) -> Optional[IrFunction]:
        for fn in self.functions.values():
            for instr in fn.instructions():
                if instr.ir_id == ir_id:
                    return fn
        return None

    def slot_names(self) -> Dict[int, str]:
        return {slot: name for name, slot in self.storage_layout.items()}


def replace_uses(fn: IrFunction, old: int, new: int):
    for instr in fn.instructions():
        if old in instr.uses:
            instr.replace_use(old, new)


def collapse_single_phis(fn: IrFunction) -> List[int]:
    """Phis left with one distinct incoming value become that value; returns removed ids"""
    removed: List[int] = []
    changed = True
    while changed:
        changed = False
        for block in fn.blocks:
            for phi in list(block.phis):
                values = {v for _, v in phi.incoming if v != phi.ir_id}
                if len(values) == 1:
                    block.instrs.remove(phi)
                    replace_uses(fn, phi.ir_id, values.pop())
                    removed.append(phi.ir_id)
                    changed = True
    return removed


def call_graph(module: IrModule) -> nx.DiGraph:
    graph = nx.DiGraph()
    for fn in module.functions.values():
        graph.add_node(fn.key)
        for instr in fn.instructions():
            if instr.opcode == "call":
                graph.add_edge(fn.key, instr.attrs["callee"])
    return graph


def recursive_functions(graph: nx.DiGraph) -> Set[str]:
    """Nodes on a call cycle, self-calls included"""
    out: Set[str] = set()
    for component in nx.strongly_connected_components(graph):
        if len(component) > 1 or any(graph.has_edge(n, n) for n in component):
            out |= component
    return out
