"""
Reference interpreter - runs MiniSol straight from the resolved AST

Ground truth for the accuracy oracle. It never looks at IR, bytecode or
provenance; its trace is the sequence of statements entered, plus:
    - a resume event for the calling statement when an internal call returns
    - the function's implicit return on fall-through (always, for modified functions)
    - a loop-header event on every condition evaluation

Live activations of recursive functions are capped at CALL_DEPTH_LIMIT, the
same cap the VM applies.
"""

import logging
import sys
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Set, Tuple

import networkx as nx

from execution.state import (CALL_DEPTH_LIMIT, REVERTED, RETURNED, ExecResult, Storage, TxInput,
                             apply_overrides, initial_state, resolve_function_key, snapshot)
from frontend.ast_nodes import AstNode
from frontend.resolver import Symbol
from frontend.unit import CompilationUnit
from lowering.ir import recursive_functions
from model.errors import CallDepthLimit, StepLimit
from model.words import DIV_BY_ZERO, MASK, SOURCE_BINOPS, SOURCE_CMPS, apply_binop, apply_cmp

logger = logging.getLogger(__name__)

INTERPRETER_STEP_LIMIT = 10 ** 6
# python frames per recursive activation, expression nesting included
FRAMES_PER_CALL = 64

Env = Dict[Symbol, int]


class _Revert(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class _Return(Exception):
    def __init__(self, value: Optional[int]):
        super().__init__()
        self.value = value


def source_call_graph(functions: List[Symbol]) -> nx.DiGraph:
    """Caller key -> callee key, counting calls made by a function's modifiers as its own"""
    graph = nx.DiGraph()
    for fn in functions:
        graph.add_node(fn.key)
        bodies = [fn.node] + [invocation.resolved.node for invocation in fn.node["modifiers"] or []]
        for body in bodies:
            for node in body.walk():
                if node.kind == "call":
                    graph.add_edge(fn.key, node.resolved.key)
    return graph


@contextmanager
def _recursion_headroom(frames: int) -> Iterator[None]:
    previous = sys.getrecursionlimit()
    sys.setrecursionlimit(max(previous, frames))
    try:
        yield
    finally:
        sys.setrecursionlimit(previous)


class Interpreter:
    def __init__(self, unit: CompilationUnit, step_limit: int = INTERPRETER_STEP_LIMIT):
        self.unit = unit
        self.step_limit = step_limit
        table = unit.table
        self.slot_names = {slot: sym.storage_name for slot, sym in table.state_by_slot.items()}
        self.layout = {name: slot for slot, name in self.slot_names.items()}
        self.entry_points = {fn.key: fn for fn in table.functions() if fn.node["visibility"] != "internal"}
        self.recursive: Set[str] = recursive_functions(source_call_graph(table.functions()))
        self._reset(0)

    def _reset(self, sender: int, storage: Optional[Storage] = None):
        self.sender = sender
        self.storage: Storage = dict(storage or {})
        self.events: List[Tuple[str, Tuple[int, ...]]] = []
        self.trace: List[int] = []
        self.steps = 0
        self.depth = 0
        self.current: Optional[int] = None

    def initial_storage(self) -> Storage:
        self._reset(0)
        values = {}
        for slot, sym in self.unit.table.state_by_slot.items():
            init = sym.node["init"]
            values[slot] = self._eval(init, {}) if init is not None else 0
        return initial_state(values)

    # --- transactions ---

    def execute(self, tx: TxInput, storage: Optional[Storage] = None) -> Tuple[ExecResult, List[int], Storage]:
        """Run one transaction; returns the result, the statement trace and the post-state"""
        pre = self.initial_storage() if storage is None else dict(storage)
        pre = apply_overrides(pre, tx.storage, self.layout)
        key = resolve_function_key(self.entry_points, tx.function, len(tx.args))
        self._reset(tx.sender, pre)
        try:
            with _recursion_headroom((CALL_DEPTH_LIMIT + 1) * FRAMES_PER_CALL):
                value = self._call(self.entry_points[key], list(tx.args))
        except _Revert as r:
            result = ExecResult(REVERTED, revert_message=r.message, storage=snapshot(pre, self.slot_names))
            post = pre
        else:
            post = {k: v for k, v in self.storage.items() if v}
            result = ExecResult(RETURNED, value=value, storage=snapshot(post, self.slot_names),
                                events=list(self.events))
        logger.debug("[INTERPRETER] %s: %s, %d statement event(s)", key, result.status, len(self.trace))
        return result, list(self.trace), post

    # --- bookkeeping ---

    def _tick(self):
        self.steps += 1
        if self.steps > self.step_limit:
            raise StepLimit(f"more than {self.step_limit} interpreter steps")

    def _event(self, statement_id: int):
        self._tick()
        self.trace.append(statement_id)
        self.current = statement_id

    # --- functions and modifiers ---

    def _call(self, fn: Symbol, args: List[int]) -> Optional[int]:
        if fn.key not in self.recursive:
            return self._activate(fn, args)
        if self.depth >= CALL_DEPTH_LIMIT:
            raise CallDepthLimit(f"more than {CALL_DEPTH_LIMIT} nested recursive calls")
        self.depth += 1
        try:
            return self._activate(fn, args)
        finally:
            self.depth -= 1

    def _activate(self, fn: Symbol, args: List[int]) -> Optional[int]:
        node = fn.node
        env: Env = {p.resolved: a for p, a in zip(node["params"], args)}
        if not node["modifiers"]:
            try:
                self._exec(node["body"], env)
            except _Return as r:
                return r.value
            self._event(node.node_id)
            return None
        result = [0 if node["returns"] is not None else None]
        self._modified(node, 0, env, result)
        self._event(node.node_id)
        return result[0]

    def _modified(self, fn: AstNode, depth: int, env: Env, result: list):
        invocations = fn["modifiers"]
        if depth == len(invocations):
            try:
                self._exec(fn["body"], env)
            except _Return as r:
                if r.value is not None:
                    result[0] = r.value
            return
        invocation = invocations[depth]
        values = []
        if invocation["args"]:
            self._event(invocation.node_id)
            values = [self._eval(a, env) for a in invocation["args"]]
        modifier = invocation.resolved.node
        own: Env = {p.resolved: v for p, v in zip(modifier["params"], values)}
        self._exec(modifier["body"], own, lambda: self._modified(fn, depth + 1, env, result))

    # --- statements ---

    def _exec(self, node: AstNode, env: Env, placeholder: Optional[Callable] = None):
        kind = node.kind
        if kind == "block":
            for stmt in node["stmts"]:
                self._exec(stmt, env, placeholder)
        elif kind == "placeholder":
            placeholder()
        elif kind == "var_decl":
            self._event(node.node_id)
            env[node.resolved] = self._eval(node["init"], env) if node["init"] is not None else 0
        elif kind == "assign":
            self._event(node.node_id)
            self._assign(node, env)
        elif kind == "if":
            self._event(node.node_id)
            if self._eval(node["cond"], env):
                self._exec(node["then"], env, placeholder)
            elif node["else_"] is not None:
                self._exec(node["else_"], env, placeholder)
        elif kind == "while":
            while True:
                self._event(node.node_id)
                if not self._eval(node["cond"], env):
                    break
                self._exec(node["body"], env, placeholder)
        elif kind == "for":
            self._for(node, env, placeholder)
        elif kind == "require":
            self._event(node.node_id)
            if not self._eval(node["cond"], env):
                raise _Revert(node["message"] if node["message"] is not None else "")
        elif kind == "emit":
            self._event(node.node_id)
            args = tuple(self._eval(a, env) for a in node["args"])
            self.events.append((node["name"], args))
        elif kind == "return":
            self._event(node.node_id)
            raise _Return(self._eval(node["value"], env) if node["value"] is not None else None)
        elif kind == "expr_stmt":
            self._event(node.node_id)
            self._eval(node["expr"], env)
        else:
            raise ValueError(f"Cannot execute statement kind: {kind}")

    def _for(self, node: AstNode, env: Env, placeholder):
        if node["init"] is not None:
            self._exec(node["init"], env, placeholder)
        while True:
            self._tick()
            if node["cond"] is not None:
                self._event(node.node_id)
                if not self._eval(node["cond"], env):
                    break
            self._exec(node["body"], env, placeholder)
            if node["update"] is not None:
                self._exec(node["update"], env, placeholder)

    def _assign(self, node: AstNode, env: Env):
        target = node["target"]
        if target.kind == "index":
            key = self._eval(target["key"], env)
            value = self._eval(node["value"], env)
            self.storage[(target["base"].resolved.slot, key)] = value
            return
        value = self._eval(node["value"], env)
        sym = target.resolved
        if sym.kind == "state":
            self.storage[sym.slot] = value
        else:
            env[sym] = value

    # --- expressions ---

    def _eval(self, node: AstNode, env: Env) -> Optional[int]:
        self._tick()
        kind = node.kind
        if kind == "number":
            return node["value"] & MASK
        if kind == "bool":
            return int(node["value"])
        if kind == "msg_sender":
            return self.sender
        if kind == "ident":
            sym = node.resolved
            if sym.kind == "state":
                return self.storage.get(sym.slot, 0)
            return env[sym]
        if kind == "index":
            key = self._eval(node["key"], env)
            return self.storage.get((node["base"].resolved.slot, key), 0)
        if kind == "unary":
            value = self._eval(node["operand"], env)
            return int(value == 0) if node["op"] == "!" else (-value) & MASK
        if kind == "binary":
            return self._binary(node, env)
        if kind == "call":
            args = [self._eval(a, env) for a in node["args"]]
            caller = self.current
            value = self._call(node.resolved, args)
            self._event(caller)
            return value
        raise ValueError(f"Cannot evaluate expression kind: {kind}")

    def _binary(self, node: AstNode, env: Env) -> int:
        op = node["op"]
        left = self._eval(node["left"], env)
        if op == "&&":
            return self._eval(node["right"], env) if left else 0
        if op == "||":
            return 1 if left else self._eval(node["right"], env)
        right = self._eval(node["right"], env)
        if op in SOURCE_CMPS:
            return apply_cmp(SOURCE_CMPS[op], left, right)
        ir_op = SOURCE_BINOPS[op]
        if ir_op in ("div", "mod") and right == 0:
            raise _Revert(DIV_BY_ZERO)
        return apply_binop(ir_op, left, right)


def interpret_source(unit: CompilationUnit, tx: TxInput,
                     storage: Optional[Storage] = None) -> Tuple[ExecResult, List[int]]:
    result, trace, _ = Interpreter(unit).execute(tx, storage)
    return result, trace
