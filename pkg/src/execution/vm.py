"""
Bytecode VM - executes compiled programs and records every executed offset
"""

import logging
from typing import Dict, FrozenSet, List, Optional, Tuple

from backend.disasm import Decoded, decode
from backend.emitter import BytecodeProgram
from backend.isa import MAX_STACK_REACH, MNEMONIC_OPS
from execution.state import (CALL_DEPTH_LIMIT, REVERTED, RETURNED, ExecResult, Storage, TxInput,
                             apply_overrides, initial_state, resolve_function_key, snapshot)
from model.errors import CallDepthLimit, ExecutionError, InvalidJump, StackUnderflow, StepLimit
from model.words import BINOPS, MASK, apply_binop, apply_cmp

logger = logging.getLogger(__name__)

VM_STEP_LIMIT = 10 ** 7
# room for CALL_DEPTH_LIMIT full frames
MAXIMUM_STACK_SIZE = (CALL_DEPTH_LIMIT + 1) * (MAX_STACK_REACH + 2)


class Stack:
    def __init__(self, items=()):
        self.items = list(items)

    def __len__(self):
        return len(self.items)

    def push(self, value: int):
        if len(self.items) >= MAXIMUM_STACK_SIZE:
            raise ExecutionError("Stack overflow")
        self.items.append(value & MASK)

    def pop(self) -> int:
        if not self.items:
            raise StackUnderflow("Stack underflow")
        return self.items.pop()

    def peek(self, depth: int) -> int:
        """depth 1 is the top"""
        if depth > len(self.items) or depth < 1:
            raise StackUnderflow(f"DUP {depth} on a stack of {len(self.items)}")
        return self.items[-depth]

    def swap(self, depth: int):
        """Exchange the top with the item `depth` below it"""
        if depth + 1 > len(self.items) or depth < 1:
            raise StackUnderflow(f"SWAP {depth} on a stack of {len(self.items)}")
        self.items[-1], self.items[-1 - depth] = self.items[-1 - depth], self.items[-1]


class Machine:
    """
    One transaction's execution state

    `frames` holds the return offset of every live activation of a recursive
    function; a call is a JUMP onto such a body and its return is the JUMP
    back to the offset right after it.
    """

    def __init__(self, program: BytecodeProgram, instructions: Dict[int, Decoded], storage: Storage,
                 sender: int, step_limit: int = VM_STEP_LIMIT, recursive_entries: FrozenSet[int] = frozenset()):
        self.program = program
        self.instructions = instructions
        self.storage = dict(storage)
        self.sender = sender
        self.step_limit = step_limit
        self.recursive_entries = recursive_entries
        self.frames: List[int] = []
        self.stack = Stack()
        self.events: List[Tuple[str, Tuple[int, ...]]] = []
        self.trace: List[int] = []
        self.pc = 0
        self.outcome: Optional[Tuple[str, Optional[int], Optional[int]]] = None

    def jump_to(self, target: int):
        instr = self.instructions.get(target)
        if instr is None or instr.mnemonic != "JUMPDEST":
            raise InvalidJump(f"jump from 0x{self.pc:04x} to 0x{target:04x}, which is not a JUMPDEST")
        self.pc = target

    def enter(self, return_offset: int):
        if len(self.frames) >= CALL_DEPTH_LIMIT:
            raise CallDepthLimit(f"more than {CALL_DEPTH_LIMIT} nested recursive calls")
        self.frames.append(return_offset)

    def run(self, entry: int, args: List[int]):
        for word in args:
            self.stack.push(word)
        self.pc = entry
        steps = 0
        while self.outcome is None:
            instr = self.instructions.get(self.pc)
            if instr is None:
                raise ExecutionError(f"execution ran off the code at 0x{self.pc:04x}")
            steps += 1
            if steps > self.step_limit:
                raise StepLimit(f"more than {self.step_limit} instructions executed")
            self.trace.append(self.pc)
            self.step(instr)

    def step(self, instr: Decoded):
        name = instr.mnemonic
        imm = instr.immediates
        stack = self.stack
        next_pc = self.pc + instr.size

        if name in MNEMONIC_OPS:
            b = stack.pop()
            a = stack.pop()
            op = MNEMONIC_OPS[name]
            stack.push(apply_binop(op, a, b) if op in BINOPS else apply_cmp(op, a, b))
        elif name == "PUSH":
            stack.push(imm[0])
        elif name == "POP":
            stack.pop()
        elif name == "DUP":
            stack.push(stack.peek(imm[0]))
        elif name == "SWAP":
            stack.swap(imm[0])
        elif name == "ISZERO":
            stack.push(int(stack.pop() == 0))
        elif name == "NOT":
            stack.push(~stack.pop() & MASK)
        elif name == "CALLER":
            stack.push(self.sender)
        elif name == "SLOAD":
            stack.push(self.storage.get(imm[0], 0))
        elif name == "SSTORE":
            self.storage[imm[0]] = stack.pop()
        elif name == "SLOADK":
            stack.push(self.storage.get((imm[0], stack.pop()), 0))
        elif name == "SSTOREK":
            value = stack.pop()
            key = stack.pop()
            self.storage[(imm[0], key)] = value
        elif name == "JUMP":
            target = stack.pop()
            if target in self.recursive_entries:
                self.enter(next_pc)
            elif self.frames and target == self.frames[-1]:
                self.frames.pop()
            self.jump_to(target)
            return
        elif name == "JUMPI":
            target = stack.pop()
            if stack.pop():
                self.jump_to(target)
                return
        elif name in ("JUMPDEST", "ZKCONST"):
            pass
        elif name == "LOG":
            event, argc = imm
            values = [stack.pop() for _ in range(argc)]
            self.events.append((self.program.event_table[event], tuple(reversed(values))))
        elif name == "RETURN":
            self.outcome = (RETURNED, stack.pop(), None)
        elif name == "STOP":
            self.outcome = (RETURNED, None, None)
        elif name == "REVERT":
            self.outcome = (REVERTED, None, imm[0])
        else:
            raise ExecutionError(f"invalid opcode 0x{instr.raw:02x} at 0x{self.pc:04x}")
        self.pc = next_pc


class VirtualMachine:
    """Decodes a program once and runs any number of transactions against it"""

    def __init__(self, program: BytecodeProgram, step_limit: int = VM_STEP_LIMIT):
        self.program = program
        self.step_limit = step_limit
        self.instructions = {d.offset: d for d in decode(program.code)}
        self.recursive_entries = frozenset(program.body_offsets[key] for key in program.recursive)
        self.slot_names = program.slot_names()

    def initial_storage(self) -> Storage:
        return initial_state(self.program.initial_storage)

    def execute(self, tx: TxInput, storage: Optional[Storage] = None) -> Tuple[ExecResult, List[int], Storage]:
        """Run one transaction; returns the result, the offset trace and the post-state"""
        pre = self.initial_storage() if storage is None else dict(storage)
        pre = apply_overrides(pre, tx.storage, self.program.storage_layout)
        key = resolve_function_key(self.program.function_table, tx.function, len(tx.args))
        machine = Machine(self.program, self.instructions, pre, tx.sender, self.step_limit,
                          self.recursive_entries)
        machine.run(self.program.function_table[key], tx.args)

        status, value, string = machine.outcome
        if status == REVERTED:
            result = ExecResult(REVERTED, revert_message=self.program.string_table[string],
                                storage=snapshot(pre, self.slot_names), revert_index=string)
            post = pre
        else:
            post = {k: v for k, v in machine.storage.items() if v}
            result = ExecResult(RETURNED, value=value, storage=snapshot(post, self.slot_names),
                                events=machine.events)
        logger.debug("[VM] %s: %s after %d step(s)", key, result.status, len(machine.trace))
        return result, machine.trace, post


def run_vm(program: BytecodeProgram, tx: TxInput, storage: Optional[Storage] = None,
           step_limit: int = VM_STEP_LIMIT) -> Tuple[ExecResult, List[int]]:
    result, trace, _ = VirtualMachine(program, step_limit).execute(tx, storage)
    return result, trace
