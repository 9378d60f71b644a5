"""
Stack-machine code generation

Each function keeps a frame of stack slots: for internally callable bodies a
return address at the bottom, then one slot per parameter, then one per value
that outlives its block, then a stretch shared by the block-local values,
which take over a slot once its previous value is dead. Values are read with
DUP and written back with SWAP + POP, so the stack above the frame is empty
between instructions.

Every emitted instruction is logged with the ir_id it serves (None for
dispatch stubs); the log is what the mapping table is built from.
"""

import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from backend.isa import BINOP_MNEMONICS, BY_NAME, CMP_MNEMONICS, MAX_STACK_REACH, encode
from lowering.ir import BasicBlock, IrFunction, IrInstr, IrModule, call_graph, recursive_functions
from model.errors import BackendError, JumpTargetOverflow, StackTooDeep
from model.table import JumpType

logger = logging.getLogger(__name__)

MAX_CODE_SIZE = 1 << 32


@dataclass(frozen=True)
class OffsetRecord:
    """
    Attributes:
        offset: first byte of the instruction
        ir_id: IR instruction it implements, None for synthetic dispatch code
        mnemonic: opcode name
        jump: INTO on call jumps, OUT_OF on return jumps
    """
    offset: int
    ir_id: Optional[int]
    mnemonic: str
    jump: JumpType = JumpType.REGULAR


@dataclass
class OffsetLog:
    records: List[OffsetRecord] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def by_ir(self) -> Dict[int, List[OffsetRecord]]:
        out: Dict[int, List[OffsetRecord]] = {}
        for rec in self.records:
            if rec.ir_id is not None:
                out.setdefault(rec.ir_id, []).append(rec)
        return out

    @property
    def dispatch_records(self) -> int:
        return sum(1 for rec in self.records if rec.ir_id is None)


@dataclass
class BytecodeProgram:
    """
    Attributes:
        code: the encoded program
        function_table: `Contract.name/arity` -> dispatch entry offset
        string_table: revert messages, indexed by REVERT
        event_table: event names, indexed by LOG
        storage_layout: storage name -> slot
        initial_storage: slot -> value at deployment
        body_offsets: every function's body entry, dispatchable or not
        recursive: keys of the functions on a call cycle
    """
    code: bytes = b""
    function_table: Dict[str, int] = field(default_factory=dict)
    string_table: List[str] = field(default_factory=list)
    event_table: List[str] = field(default_factory=list)
    storage_layout: Dict[str, int] = field(default_factory=dict)
    initial_storage: Dict[int, int] = field(default_factory=dict)
    body_offsets: Dict[str, int] = field(default_factory=dict)
    recursive: List[str] = field(default_factory=list)

    def slot_names(self) -> Dict[int, str]:
        return {slot: name for name, slot in self.storage_layout.items()}


def _label(fn_key: str, label: str) -> str:
    return f"{fn_key}#{label}"


class Emitter:
    """Byte buffer with the offset log and a label fixup list"""

    def __init__(self):
        self.code = bytearray()
        self.log = OffsetLog()
        self.labels: Dict[str, int] = {}
        self.fixups: List[Tuple[int, str]] = []
        self._counter = 0

    def op(self, name: str, *immediates: int, ir_id: Optional[int] = None,
           jump: JumpType = JumpType.REGULAR):
        self.log.records.append(OffsetRecord(len(self.code), ir_id, name, jump))
        self.code += encode(name, *immediates)

    def push_label(self, label: str, ir_id: Optional[int] = None):
        self.fixups.append((len(self.code) + 1, label))
        self.op("PUSH", 0, ir_id=ir_id)

    def mark(self, label: str):
        if label in self.labels:
            raise BackendError(f"label {label} placed twice")
        self.labels[label] = len(self.code)

    def fresh(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}~{self._counter}"

    def patch(self):
        """Second pass: write resolved label offsets into the PUSH immediates"""
        if len(self.code) >= MAX_CODE_SIZE:
            raise JumpTargetOverflow(f"program of {len(self.code)} bytes exceeds the jump range")
        jumpdest = BY_NAME["JUMPDEST"].code
        for position, label in self.fixups:
            if label not in self.labels:
                raise BackendError(f"unresolved label {label}")
            target = self.labels[label]
            if self.code[target] != jumpdest:
                raise BackendError(f"label {label} at 0x{target:04x} is not a JUMPDEST")
            self.code[position:position + 8] = target.to_bytes(8, "big")


def block_local_values(fn: IrFunction) -> Set[int]:
    """Values defined and used inside one block and never fed to a phi"""
    home = {i.ir_id: b.label for b in fn.blocks for i in b.instrs
            if i.defines_value and not i.is_phi and (i.opcode != "param" or "env" in i.attrs)}
    local = set(home)
    for block in fn.blocks:
        for instr in block.instrs:
            if instr.is_phi:
                local.difference_update(v for _, v in instr.incoming)
            else:
                local.difference_update(a for a in instr.args if home.get(a) != block.label)
    return local


def pack_block(block: BasicBlock, local: Set[int]) -> Tuple[Dict[int, int], int]:
    """
    Give each local value of the block a slot index, reusing a slot once the
    value in it has had its last use; returns the assignment and the slot count

    An instruction's arguments are all read before its result is written, so
    the result may take a slot its own arguments free.
    """
    last_use: Dict[int, int] = {}
    for n, instr in enumerate(block.instrs):
        for arg in instr.args:
            if arg in local:
                last_use[arg] = n
    assigned: Dict[int, int] = {}
    free: List[int] = []
    width = 0
    for n, instr in enumerate(block.instrs):
        for arg in sorted(set(instr.args)):
            if arg in local and last_use[arg] == n:
                heapq.heappush(free, assigned[arg])
        if instr.ir_id not in local:
            continue
        if free:
            slot = heapq.heappop(free)
        else:
            slot = width
            width += 1
        assigned[instr.ir_id] = slot
        if instr.ir_id not in last_use:
            heapq.heappush(free, slot)
    return assigned, width


class FunctionEmitter:
    def __init__(self, out: Emitter, module: IrModule, fn: IrFunction):
        self.out = out
        self.module = module
        self.fn = fn
        self.internal = fn.callable
        base = 1 if self.internal else 0
        self.slots: Dict[int, int] = {}
        next_slot = base + len(fn.params)
        local = block_local_values(fn)
        for instr in fn.instructions():
            if instr.opcode == "param" and "env" not in instr.attrs:
                self.slots[instr.ir_id] = base + instr.attrs["index"]
            elif instr.defines_value and instr.ir_id not in local:
                self.slots[instr.ir_id] = next_slot
                next_slot += 1
        # every block packs its local values into one shared stretch of slots
        width = 0
        for block in fn.blocks:
            packed, used = pack_block(block, local)
            self.slots.update({value: next_slot + slot for value, slot in packed.items()})
            width = max(width, used)
        next_slot += width
        self.size = next_slot
        self.locals = next_slot - base - len(fn.params)
        self.depth = 0
        self.blocks = fn.block_map()
        self.stubs: List[Tuple[str, IrInstr, str, str]] = []

    # --- frame access ---

    def _reach(self, value: int) -> int:
        if value not in self.slots:
            raise BackendError(f"{self.fn.key}: %{value} has no stack slot")
        reach = self.size - self.slots[value] + self.depth
        if reach > MAX_STACK_REACH:
            raise StackTooDeep(f"{self.fn.key}: %{value} is {reach} slots deep")
        return reach

    def read(self, value: int, ir_id: int):
        self.out.op("DUP", self._reach(value), ir_id=ir_id)
        self.depth += 1

    def write(self, value: int, ir_id: int):
        reach = self._reach(value) - 1
        self.out.op("SWAP", reach, ir_id=ir_id)
        self.out.op("POP", ir_id=ir_id)
        self.depth -= 1

    def push(self, name: str, *immediates: int, ir_id: int, net: int):
        self.out.op(name, *immediates, ir_id=ir_id)
        self.depth += net

    # --- layout ---

    def emit(self):
        fn = self.fn
        self.out.mark(_label(fn.key, fn.entry.label))
        for block in fn.blocks:
            self._block(block, first=block is fn.entry)
            for stub_label, branch, source, target in self.stubs:
                self.out.mark(stub_label)
                self.out.op("JUMPDEST", ir_id=branch.ir_id)
                self._phi_copies(source, target, branch.ir_id)
                self._jump(target, branch.ir_id)
            self.stubs = []

    def _anchor(self, block: BasicBlock) -> IrInstr:
        lead = block.leading()
        if lead is None:
            raise BackendError(f"{self.fn.key}: block {block.label} has no terminator")
        return lead

    def _block(self, block: BasicBlock, first: bool):
        if not first:
            self.out.mark(_label(self.fn.key, block.label))
        anchor = self._anchor(block)
        if first:
            # the entry belongs to the function's own first statement, not to an inlined callee
            own = (i for i in self.fn.instructions()
                   if i.opcode != "param" and not i.is_phi and not i.provenance.inline_chain)
            anchor = next(own, next((i for i in block.instrs if i.opcode != "param"), anchor))
        self.out.op("JUMPDEST", ir_id=anchor.ir_id)
        if first:
            for _ in range(self.locals):
                self.out.op("PUSH", 0, ir_id=anchor.ir_id)
        for instr in block.body:
            self.depth = 0
            self._instr(block, instr)
        if block.terminator is None:
            raise BackendError(f"{self.fn.key}: block {block.label} does not end in a terminator")

    def _jump(self, target: str, ir_id: int, jump: JumpType = JumpType.REGULAR):
        self.out.push_label(_label(self.fn.key, target), ir_id=ir_id)
        self.out.op("JUMP", ir_id=ir_id, jump=jump)

    def _phi_copies(self, source: str, target: str, ir_id: int):
        """Parallel copy: read every incoming value first, then store in reverse"""
        phis = self.blocks[target].phis
        self.depth = 0
        for phi in phis:
            self.read(dict(phi.incoming)[source], ir_id)
        for phi in reversed(phis):
            self.write(phi.ir_id, ir_id)

    # --- instructions ---

    def _instr(self, block: BasicBlock, instr: IrInstr):
        opcode = instr.opcode
        ir_id = instr.ir_id
        if opcode == "const":
            self.push("PUSH", instr.attrs["value"], ir_id=ir_id, net=1)
            self.write(ir_id, ir_id)
        elif opcode in ("binop", "cmp"):
            table = BINOP_MNEMONICS if opcode == "binop" else CMP_MNEMONICS
            self.read(instr.args[0], ir_id)
            self.read(instr.args[1], ir_id)
            self.push(table[instr.op], ir_id=ir_id, net=-1)
            self.write(ir_id, ir_id)
        elif opcode == "not":
            self.read(instr.args[0], ir_id)
            self.push("ISZERO", ir_id=ir_id, net=0)
            self.write(ir_id, ir_id)
        elif opcode == "param":
            if instr.attrs.get("env") == "caller":
                self.push("CALLER", ir_id=ir_id, net=1)
                self.write(ir_id, ir_id)
        elif opcode == "load_state":
            self.push("SLOAD", instr.attrs["slot"], ir_id=ir_id, net=1)
            self.write(ir_id, ir_id)
        elif opcode == "load_key":
            self.read(instr.args[0], ir_id)
            self.push("SLOADK", instr.attrs["slot"], ir_id=ir_id, net=0)
            self.write(ir_id, ir_id)
        elif opcode == "store_state":
            self.read(instr.args[0], ir_id)
            self.push("SSTORE", instr.attrs["slot"], ir_id=ir_id, net=-1)
        elif opcode == "store_key":
            self.read(instr.args[0], ir_id)
            self.read(instr.args[1], ir_id)
            self.push("SSTOREK", instr.attrs["slot"], ir_id=ir_id, net=-2)
        elif opcode == "emit_event":
            for arg in instr.args:
                self.read(arg, ir_id)
            event = self.module.events.index(instr.attrs["event"])
            self.push("LOG", event, len(instr.args), ir_id=ir_id, net=-len(instr.args))
        elif opcode == "zk_constraint":
            self.push("ZKCONST", instr.attrs["constraint"], ir_id=ir_id, net=0)
        elif opcode == "call":
            self._call(instr)
        elif opcode == "jump":
            self._phi_copies(block.label, instr.targets[0], ir_id)
            self._jump(instr.targets[0], ir_id, instr.jump)
        elif opcode == "branch":
            self._branch(block, instr)
        elif opcode == "return":
            self._return(instr)
        elif opcode == "revert":
            self.push("REVERT", instr.attrs["string"], ir_id=ir_id, net=0)
        else:
            raise BackendError(f"cannot emit IR opcode {opcode}")

    def _call(self, instr: IrInstr):
        callee = self.module.functions.get(instr.attrs["callee"])
        if callee is None or not callee.callable:
            raise BackendError(f"{self.fn.key}: call to unknown internal function {instr.attrs['callee']}")
        ir_id = instr.ir_id
        cont = self.out.fresh(_label(self.fn.key, "ret"))
        self.out.push_label(cont, ir_id=ir_id)
        self.depth += 1
        for arg in instr.args:
            self.read(arg, ir_id)
        self.out.push_label(_label(callee.key, callee.entry.label), ir_id=ir_id)
        self.out.op("JUMP", ir_id=ir_id, jump=instr.jump)
        self.out.mark(cont)
        self.out.op("JUMPDEST", ir_id=ir_id)
        # the callee leaves exactly one word behind
        self.depth = 1
        if instr.defines_value:
            self.write(ir_id, ir_id)
        else:
            self.push("POP", ir_id=ir_id, net=-1)

    def _branch(self, block: BasicBlock, instr: IrInstr):
        ir_id = instr.ir_id
        true_target, false_target = instr.targets
        self.read(instr.args[0], ir_id)
        if self.blocks[true_target].phis:
            stub = self.out.fresh(_label(self.fn.key, "edge"))
            self.stubs.append((stub, instr, block.label, true_target))
            self.out.push_label(stub, ir_id=ir_id)
        else:
            self.out.push_label(_label(self.fn.key, true_target), ir_id=ir_id)
        self.out.op("JUMPI", ir_id=ir_id)
        self.depth = 0
        self._phi_copies(block.label, false_target, ir_id)
        self._jump(false_target, ir_id)

    def _return(self, instr: IrInstr):
        ir_id = instr.ir_id
        if not self.internal:
            if instr.args:
                self.read(instr.args[0], ir_id)
                self.out.op("RETURN", ir_id=ir_id, jump=instr.jump)
            else:
                self.out.op("STOP", ir_id=ir_id, jump=instr.jump)
            return
        if instr.args:
            self.read(instr.args[0], ir_id)
        else:
            self.push("PUSH", 0, ir_id=ir_id, net=1)
        # [ret, frame..., value] -> [value, ret]
        above = self.size - 1
        if above > MAX_STACK_REACH:
            raise StackTooDeep(f"{self.fn.key}: frame of {self.size} slots")
        if above:
            self.out.op("SWAP", above, ir_id=ir_id)
            for _ in range(above):
                self.out.op("POP", ir_id=ir_id)
        self.out.op("SWAP", 1, ir_id=ir_id)
        self.out.op("JUMP", ir_id=ir_id, jump=instr.jump)


def _dispatch_stub(out: Emitter, fn: IrFunction) -> int:
    """External entry for a public function: call the body, then finish the transaction"""
    offset = len(out.code)
    cont = out.fresh(_label(fn.key, "dispatch"))
    arity = len(fn.params)
    out.op("JUMPDEST")
    out.push_label(cont)
    for _ in range(arity):
        out.op("DUP", arity + 1)
    out.push_label(_label(fn.key, fn.entry.label))
    out.op("JUMP")
    out.mark(cont)
    out.op("JUMPDEST")
    out.op("RETURN" if fn.returns else "STOP")
    return offset


def emit(module: IrModule) -> Tuple[BytecodeProgram, OffsetLog]:
    """Lower the IR module to bytecode plus the offset log"""
    out = Emitter()
    program = BytecodeProgram(string_table=list(module.strings), event_table=list(module.events),
                              storage_layout=dict(module.storage_layout),
                              initial_storage=dict(module.initial_storage),
                              recursive=sorted(recursive_functions(call_graph(module))))
    for fn in module.functions.values():
        program.body_offsets[fn.key] = len(out.code)
        FunctionEmitter(out, module, fn).emit()
        if fn.visibility == "external":
            program.function_table[fn.key] = program.body_offsets[fn.key]
        elif fn.visibility == "public":
            program.function_table[fn.key] = _dispatch_stub(out, fn)
    out.patch()
    program.code = bytes(out.code)
    logger.info("[BACKEND] %d byte(s), %d instruction(s), %d dispatch entr%s",
                len(program.code), len(out.log), len(program.function_table),
                "y" if len(program.function_table) == 1 else "ies")
    return program, out.log
