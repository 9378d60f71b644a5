"""
Lowering - resolved AST to SSA IR

SSA is built on the fly (sealed blocks, incomplete phis, trivial-phi
removal). Modifier bodies are spliced around `_;`; the i-th modifier
invocation runs at modifier_depth i and the function body at 0.
"""

import logging
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Tuple

from frontend.ast_nodes import AstNode
from frontend.resolver import Symbol
from frontend.typecheck import check_types
from frontend.unit import CompilationUnit
from lowering.ir import BasicBlock, IrFunction, IrInstr, IrModule, collapse_single_phis
from model.errors import MissingReturn
from model.provenance import Confidence, Provenance
from model.span import SourceSpan
from model.table import JumpType
from model.words import DIV_BY_ZERO, SOURCE_BINOPS, SOURCE_CMPS

logger = logging.getLogger(__name__)

RET = "$ret"


class FunctionLowerer:
    def __init__(self, lowerer: "Lowerer", symbol: Symbol):
        self.lowerer = lowerer
        self.module = lowerer.module
        self.symbol = symbol
        self.node = symbol.node
        self.mapping = lowerer.mapping_enabled
        self.fn = IrFunction(symbol.key, symbol.name, symbol.contract,
                             params=[p["name"] for p in self.node["params"]],
                             returns=self.node["returns"] is not None,
                             visibility=self.node["visibility"] or "public",
                             span=self.node.span)

        self.block: Optional[BasicBlock] = None
        self.preds: Dict[str, List[str]] = {}
        self.sealed = set()
        self.current_def: Dict[object, Dict[str, int]] = {}
        self.incomplete: Dict[str, Dict[object, IrInstr]] = {}
        self.forward: Dict[int, int] = {}
        self.phi_block: Dict[int, str] = {}
        self.origin: Dict[str, Tuple[SourceSpan, Optional[int]]] = {}

        self.stmt_span: SourceSpan = self.node.span
        self.stmt_id: Optional[int] = None
        self.depth = 0
        self.return_target: Optional[str] = None
        self.own_nodes = {n for n in self.node.walk() if n.kind in ("param", "var_decl")}

    # --- provenance and emission ---

    def _prov(self, span: SourceSpan, confidence: Confidence = Confidence.EXACT) -> Provenance:
        if not self.mapping:
            return Provenance()
        return Provenance(primary_span=span, confidence=confidence, statement_id=self.stmt_id)

    def _current(self) -> BasicBlock:
        if self.block is None:
            # code after return/revert: lowered into a block nothing jumps to
            self._start(self._new_block("dead"), seal=True)
        return self.block

    def _new_block(self, hint: str) -> BasicBlock:
        block = self.fn.new_block(hint)
        self.preds[block.label] = []
        self.origin[block.label] = (self.stmt_span, self.stmt_id)
        return block

    def _start(self, block: BasicBlock, seal: bool = False):
        self.block = block
        if seal:
            self._seal(block.label)

    def emit(self, opcode: str, span: SourceSpan, args=(), targets=(), attrs=None,
             jump: JumpType = JumpType.REGULAR) -> IrInstr:
        block = self._current()
        instr = IrInstr(self.module.new_id(), opcode, list(args), list(targets), [],
                        dict(attrs or {}), self._prov(span), jump, self.depth, self.stmt_id)
        block.instrs.append(instr)
        for target in instr.targets:
            self.preds[target].append(block.label)
        if instr.is_terminator:
            self.block = None
        return instr

    def jump(self, target: BasicBlock, span: SourceSpan):
        if self.block is not None:
            self.emit("jump", span, targets=[target.label])

    # --- SSA construction ---

    def _resolve(self, value: int) -> int:
        while value in self.forward:
            value = self.forward[value]
        return value

    def write(self, var, value: int, label: Optional[str] = None):
        label = label or self._current().label
        self.current_def.setdefault(var, {})[label] = value

    def read(self, var, label: Optional[str] = None) -> int:
        label = label or self._current().label
        defs = self.current_def.get(var, {})
        if label in defs:
            return self._resolve(defs[label])
        return self._read_recursive(var, label)

    def _read_recursive(self, var, label: str) -> int:
        preds = self.preds[label]
        if label not in self.sealed:
            phi = self._new_phi(label)
            self.incomplete.setdefault(label, {})[var] = phi
            value = phi.ir_id
        elif len(preds) == 1:
            value = self.read(var, preds[0])
        elif not preds:
            value = self._undef(label)
        else:
            phi = self._new_phi(label)
            self.write(var, phi.ir_id, label)
            value = self._add_phi_operands(var, phi)
        self.write(var, value, label)
        return value

    def _new_phi(self, label: str) -> IrInstr:
        span, stmt = self.origin[label]
        prov = Provenance(span, Confidence.APPROXIMATE, statement_id=stmt) if self.mapping else Provenance()
        phi = IrInstr(self.module.new_id(), "phi", provenance=prov, modifier_depth=self.depth,
                      statement=stmt)
        block = self.fn.block(label)
        block.instrs.insert(len(block.phis), phi)
        self.phi_block[phi.ir_id] = label
        return phi

    def _undef(self, label: str) -> int:
        block = self.fn.block(label)
        position = len([i for i in block.instrs if i.is_phi or i.opcode == "param"])
        const = IrInstr(self.module.new_id(), "const", attrs={"value": 0},
                        provenance=self._prov(self.stmt_span), modifier_depth=self.depth,
                        statement=self.stmt_id)
        block.instrs.insert(position, const)
        return const.ir_id

    def _add_phi_operands(self, var, phi: IrInstr) -> int:
        for pred in self.preds[self.phi_block[phi.ir_id]]:
            phi.incoming.append((pred, self.read(var, pred)))
        return self._try_remove_trivial(phi)

    def _try_remove_trivial(self, phi: IrInstr) -> int:
        if phi.ir_id in self.forward:
            return self._resolve(phi.ir_id)
        same = None
        for _, operand in phi.incoming:
            operand = self._resolve(operand)
            if operand == same or operand == phi.ir_id:
                continue
            if same is not None:
                return phi.ir_id
            same = operand
        label = self.phi_block[phi.ir_id]
        if same is None:
            same = self._undef(label)
        self.fn.block(label).instrs.remove(phi)
        self.forward[phi.ir_id] = same
        for block in self.fn.blocks:
            for user in list(block.phis):
                if any(v == phi.ir_id for _, v in user.incoming):
                    self._try_remove_trivial(user)
        return same

    def _seal(self, label: str):
        for var, phi in self.incomplete.pop(label, {}).items():
            self._add_phi_operands(var, phi)
        self.sealed.add(label)

    def _finish_ssa(self):
        for instr in self.fn.instructions():
            instr.args = [self._resolve(a) for a in instr.args]
            instr.incoming = [(lbl, self._resolve(v)) for lbl, v in instr.incoming]

    def _reachable(self, label: str) -> bool:
        succs: Dict[str, List[str]] = {}
        for target, sources in self.preds.items():
            for source in sources:
                succs.setdefault(source, []).append(target)
        seen, stack = set(), [self.fn.entry.label]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(succs.get(cur, []))
        return label in seen

    # --- variables ---

    def _var(self, symbol: Symbol):
        """Modifier-owned variables are keyed by depth; a modifier may be invoked twice"""
        return (0 if symbol.node in self.own_nodes else self.depth, symbol)

    # --- functions ---

    def lower(self) -> IrFunction:
        entry = self._new_block("entry")
        self._start(entry, seal=True)
        for index, p in enumerate(self.node["params"]):
            instr = self.emit("param", p.span, attrs={"index": index, "name": p["name"]})
            self.write(self._var(p.resolved), instr.ir_id)

        self._modified(0)

        end_span = self.node["end_span"]
        self.stmt_span, self.stmt_id = end_span, self.node.node_id
        self.depth = 0
        if self.block is not None and self._reachable(self.block.label):
            if self.fn.returns and not self.node["modifiers"]:
                raise MissingReturn(f"function '{self.symbol.name}' can finish without returning a value",
                                    end_span)
            args = [self.read(RET)] if self.fn.returns else []
            self.emit("return", end_span, args=args, jump=JumpType.OUT_OF)
        elif self.block is not None:
            self.emit("revert", end_span, attrs={"message": "", "string": self.module.intern_string("")})

        self._finish_ssa()
        self.fn.remove_unreachable()
        collapse_single_phis(self.fn)
        return self.fn

    def _modified(self, depth: int):
        invocations = self.node["modifiers"]
        if depth == len(invocations):
            self.depth = 0
            if not invocations:
                self._stmt(self.node["body"])
                return
            cont = self._new_block("cont")
            saved_target, self.return_target = self.return_target, cont.label
            self._stmt(self.node["body"])
            if self.block is not None and self._reachable(self.block.label) and self.fn.returns:
                raise MissingReturn(f"function '{self.symbol.name}' can finish without returning a value",
                                    self.node["end_span"])
            self.jump(cont, self.stmt_span)
            self.return_target = saved_target
            self._start(cont, seal=True)
            return

        invocation = invocations[depth]
        modifier = invocation.resolved.node
        self.depth = depth + 1
        self.stmt_span, self.stmt_id = invocation.span, invocation.node_id
        values = [self._expr(arg) for arg in invocation["args"]]
        for p, value in zip(modifier["params"], values):
            self.write(self._var(p.resolved), value)

        def placeholder():
            self._modified(depth + 1)
            self.depth = depth + 1

        self._stmt(modifier["body"], placeholder)

    # --- statements ---

    def _stmt(self, node: AstNode, placeholder: Optional[Callable] = None):
        kind = node.kind
        if kind == "block":
            for s in node["stmts"]:
                self._stmt(s, placeholder)
            return
        if kind == "placeholder":
            placeholder()
            return

        self.stmt_span, self.stmt_id = node.span, node.node_id
        if kind == "var_decl":
            if node["init"] is not None:
                value = self._expr(node["init"])
            else:
                value = self.emit("const", node.span, attrs={"value": 0}).ir_id
            self.write(self._var(node.resolved), value)
        elif kind == "assign":
            self._assign(node)
        elif kind == "if":
            self._if(node, placeholder)
        elif kind == "while":
            self._loop(node, node["cond"], node["body"], None, placeholder)
        elif kind == "for":
            if node["init"] is not None:
                self._stmt(node["init"], placeholder)
            self.stmt_span, self.stmt_id = node.span, node.node_id
            self._loop(node, node["cond"], node["body"], node["update"], placeholder)
        elif kind == "require":
            self._require(node)
        elif kind == "emit":
            args = [self._expr(a) for a in node["args"]]
            self.emit("emit_event", node.span, args=args, attrs={"event": node["name"]})
        elif kind == "return":
            self._return(node)
        elif kind == "expr_stmt":
            self._expr(node["expr"])

    def _assign(self, node: AstNode):
        target = node["target"]
        if target.kind == "index":
            slot = target["base"].resolved.slot
            key = self._expr(target["key"])
            value = self._expr(node["value"])
            self.emit("store_key", node.span, args=[key, value],
                      attrs={"slot": slot, "name": target["base"].resolved.storage_name})
            return
        value = self._expr(node["value"])
        sym = target.resolved
        if sym.kind == "state":
            self.emit("store_state", node.span, args=[value], attrs={"slot": sym.slot, "name": sym.storage_name})
        else:
            self.write(self._var(sym), value)

    def _if(self, node: AstNode, placeholder):
        cond = self._expr(node["cond"])
        then_b = self._new_block("then")
        join = self._new_block("join")
        else_b = self._new_block("else") if node["else_"] is not None else join
        self.emit("branch", node.span, args=[cond], targets=[then_b.label, else_b.label],
                  attrs={"origin": "if"})
        self._start(then_b, seal=True)
        self._stmt(node["then"], placeholder)
        self.stmt_span, self.stmt_id = node.span, node.node_id
        self.jump(join, node.span)
        if else_b is not join:
            self._start(else_b, seal=True)
            self._stmt(node["else_"], placeholder)
            self.stmt_span, self.stmt_id = node.span, node.node_id
            self.jump(join, node.span)
        self._start(join, seal=True)

    def _loop(self, node: AstNode, cond_node, body, update, placeholder):
        header = self._new_block("head")
        self.jump(header, node.span)
        self._start(header)
        body_b = self._new_block("body")
        exit_b = self._new_block("exit")
        if cond_node is not None:
            cond = self._expr(cond_node)
            self.emit("branch", node.span, args=[cond], targets=[body_b.label, exit_b.label],
                      attrs={"origin": "loop", "loop": node.kind})
        else:
            self.jump(body_b, node.span)
        self._start(body_b, seal=True)
        self._stmt(body, placeholder)
        if update is not None:
            self._stmt(update, placeholder)
        self.stmt_span, self.stmt_id = node.span, node.node_id
        self.jump(header, node.span)
        self._seal(header.label)
        self._start(exit_b, seal=True)

    def _require(self, node: AstNode):
        cond = self._expr(node["cond"])
        message = node["message"] if node["message"] is not None else ""
        cont = self._new_block("ok")
        fail = self._new_block("fail")
        self.emit("branch", node.span, args=[cond], targets=[cont.label, fail.label],
                  attrs={"origin": "require", "message": message})
        self._start(fail, seal=True)
        self.emit("revert", node.span, attrs={"message": message, "string": self.module.intern_string(message)})
        self._start(cont, seal=True)

    def _return(self, node: AstNode):
        value = self._expr(node["value"]) if node["value"] is not None else None
        if self.return_target is not None:
            if value is not None:
                self.write(RET, value)
            self.emit("jump", node.span, targets=[self.return_target])
            return
        self.emit("return", node.span, args=[value] if value is not None else [], jump=JumpType.OUT_OF)

    # --- expressions ---

    def _expr(self, node: AstNode) -> Optional[int]:
        kind = node.kind
        span = node.span
        if kind == "number":
            return self.emit("const", span, attrs={"value": node["value"]}).ir_id
        if kind == "bool":
            return self.emit("const", span, attrs={"value": int(node["value"])}).ir_id
        if kind == "msg_sender":
            return self.emit("param", span, attrs={"env": "caller", "name": "msg.sender"}).ir_id
        if kind == "ident":
            sym = node.resolved
            if sym.kind == "state":
                return self.emit("load_state", span, attrs={"slot": sym.slot, "name": sym.storage_name}).ir_id
            return self.read(self._var(sym))
        if kind == "index":
            base = node["base"].resolved
            key = self._expr(node["key"])
            return self.emit("load_key", span, args=[key], attrs={"slot": base.slot, "name": base.storage_name}).ir_id
        if kind == "unary":
            operand = self._expr(node["operand"])
            if node["op"] == "!":
                return self.emit("not", span, args=[operand]).ir_id
            zero = self.emit("const", span, attrs={"value": 0}).ir_id
            return self.emit("binop", span, args=[zero, operand], attrs={"op": "sub"}).ir_id
        if kind == "binary":
            return self._binary(node)
        if kind == "call":
            fn = node.resolved
            args = [self._expr(a) for a in node["args"]]
            instr = self.emit("call", span, args=args,
                              attrs={"callee": fn.key, "returns": fn.type is not None}, jump=JumpType.INTO)
            return instr.ir_id if fn.type is not None else None
        raise ValueError(f"Cannot lower expression kind: {kind}")

    def _binary(self, node: AstNode) -> int:
        op = node["op"]
        span = node.span
        if op in ("&&", "||"):
            return self._short_circuit(node)
        left = self._expr(node["left"])
        right = self._expr(node["right"])
        if op in SOURCE_CMPS:
            return self.emit("cmp", span, args=[left, right], attrs={"op": SOURCE_CMPS[op]}).ir_id
        ir_op = SOURCE_BINOPS[op]
        if ir_op in ("div", "mod"):
            zero = self.emit("const", span, attrs={"value": 0}).ir_id
            nonzero = self.emit("cmp", span, args=[right, zero], attrs={"op": "ne"}).ir_id
            ok = self._new_block("ok")
            fail = self._new_block("fail")
            self.emit("branch", span, args=[nonzero], targets=[ok.label, fail.label],
                      attrs={"origin": "div", "message": DIV_BY_ZERO})
            self._start(fail, seal=True)
            self.emit("revert", span, attrs={"message": DIV_BY_ZERO,
                                             "string": self.module.intern_string(DIV_BY_ZERO)})
            self._start(ok, seal=True)
        return self.emit("binop", span, args=[left, right], attrs={"op": ir_op}).ir_id

    def _short_circuit(self, node: AstNode) -> int:
        op = node["op"]
        left = self._expr(node["left"])
        left_block = self._current()
        rhs = self._new_block("rhs")
        join = self._new_block("sc")
        targets = [rhs.label, join.label] if op == "&&" else [join.label, rhs.label]
        self.emit("branch", node.span, args=[left], targets=targets, attrs={"origin": "and" if op == "&&" else "or"})
        self._start(rhs, seal=True)
        right = self._expr(node["right"])
        right_block = self._current()
        self.jump(join, node.span)
        self._start(join, seal=True)
        phi = self._new_phi(join.label)
        phi.incoming = [(left_block.label, left), (right_block.label, right)]
        return phi.ir_id


class Lowerer:
    def __init__(self, unit: CompilationUnit, mapping_enabled: bool = True):
        self.unit = unit
        self.mapping_enabled = mapping_enabled
        self.module = IrModule()

    def lower(self) -> IrModule:
        table = self.unit.table
        self.module.initial_storage = check_types(table)
        for slot, sym in sorted(table.state_by_slot.items()):
            self.module.storage_layout[sym.storage_name] = slot
        for scope in table.contracts.values():
            for name in scope.events:
                if name not in self.module.events:
                    self.module.events.append(name)
        for fn in table.functions():
            self.module.functions[fn.key] = FunctionLowerer(self, fn).lower()
        if self.mapping_enabled:
            attribute_structural_instructions(self.module)
        logger.info("[LOWERING] %d function(s), %d instruction(s)", len(self.module.functions),
                    sum(1 for _ in self.module.instructions()))
        return self.module


def _anchor(fn: IrFunction, label: str, hops: int = 0) -> Optional[IrInstr]:
    """The instruction that executes first when control reaches `label`"""
    block = fn.block(label)
    lead = block.leading()
    if lead is not None and lead.opcode == "jump" and hops < len(fn.blocks):
        return _anchor(fn, lead.targets[0], hops + 1)
    return lead


def attribute_structural_instructions(module: IrModule):
    """
    Jumps take the provenance of the code they lead to; parameters take the
    statement of the first real instruction of the entry block
    """
    for fn in module.functions.values():
        for block in fn.blocks:
            term = block.terminator
            if term is not None and term.opcode == "jump" and term.jump == JumpType.REGULAR:
                target = _anchor(fn, term.targets[0])
                if target is not None and target is not term:
                    term.provenance = target.provenance
                    term.modifier_depth = target.modifier_depth
        first = next((i for i in fn.entry.instrs if i.opcode != "param"), None)
        if first is not None:
            for instr in fn.entry.instrs:
                if instr.opcode == "param" and "env" not in instr.attrs:
                    instr.provenance = replace(instr.provenance, statement_id=first.provenance.statement_id)


def lower(unit: CompilationUnit, mapping_enabled: bool = True) -> IrModule:
    """Type-check and lower a compilation unit"""
    return Lowerer(unit, mapping_enabled).lower()
