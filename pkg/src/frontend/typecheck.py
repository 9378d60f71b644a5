"""
Type checker - uint/bool/address/mapping discipline

Annotates expression nodes with `node.type` and evaluates state-variable
initialisers, which must be constant expressions.
"""

from typing import Dict, Optional

from frontend.ast_nodes import ADDRESS, BOOL, UINT, AstNode, TypeRef
from frontend.resolver import SymbolTable
from model.errors import TypeCheckError
from model.words import MASK, SOURCE_BINOPS, SOURCE_CMPS, apply_binop, apply_cmp

ARITHMETIC = set(SOURCE_BINOPS)
ORDERING = {"<", ">", "<=", ">="}
LOGICAL = {"&&", "||"}
KEY_TYPES = (UINT, BOOL, ADDRESS)


class TypeChecker:
    def __init__(self, table: SymbolTable):
        self.table = table
        self.function: Optional[AstNode] = None

    def check(self) -> Dict[int, int]:
        """Check every contract; returns initial storage {slot: value}"""
        initial: Dict[int, int] = {}
        for scope in self.table.contracts.values():
            for member in scope.node["members"]:
                if member.kind == "state_var":
                    value = self._state_var(member)
                    if value:
                        initial[member.resolved.slot] = value
                elif member.kind in ("function", "modifier"):
                    self._declare_params(member)
                    self.function = member if member.kind == "function" else None
                    self._mod_invocations(member)
                    self._stmt(member["body"])
                    self.function = None
                elif member.kind == "event":
                    self._declare_params(member)
        return initial

    # --- declarations ---

    def _check_storage_type(self, t: TypeRef, node: AstNode):
        if t.kind == "mapping":
            if t.key not in KEY_TYPES:
                raise TypeCheckError(f"mapping key must be uint, bool or address, not {t.key}", node.span)
            if t.value.kind == "mapping":
                raise TypeCheckError("nested mappings are not supported", node.span)

    def _declare_params(self, node: AstNode):
        for p in node["params"]:
            if p["var_type"].kind == "mapping":
                raise TypeCheckError("parameters cannot have mapping type", p.span)

    def _state_var(self, node: AstNode) -> int:
        t = node["var_type"]
        self._check_storage_type(t, node)
        init = node["init"]
        if init is None:
            return 0
        if t.kind == "mapping":
            raise TypeCheckError("mappings cannot be initialised", init.span)
        self._expect(init, t)
        return evaluate_constant(init)

    def _mod_invocations(self, fn: AstNode):
        for inv in fn["modifiers"] or []:
            params = inv.resolved.node["params"]
            for arg, p in zip(inv["args"], params):
                self._expect(arg, p["var_type"])

    # --- statements ---

    def _stmt(self, node: AstNode):
        kind = node.kind
        if kind == "block":
            for s in node["stmts"]:
                self._stmt(s)
        elif kind == "var_decl":
            if node["var_type"].kind == "mapping":
                raise TypeCheckError("local variables cannot have mapping type", node.span)
            if node["init"] is not None:
                self._expect(node["init"], node["var_type"])
        elif kind == "assign":
            target_type = self._expr(node["target"])
            if target_type.kind == "mapping":
                raise TypeCheckError("cannot assign to a whole mapping", node["target"].span)
            self._expect(node["value"], target_type)
        elif kind == "if":
            self._expect(node["cond"], BOOL)
            self._stmt(node["then"])
            if node["else_"] is not None:
                self._stmt(node["else_"])
        elif kind == "while":
            self._expect(node["cond"], BOOL)
            self._stmt(node["body"])
        elif kind == "for":
            if node["init"] is not None:
                self._stmt(node["init"])
            if node["cond"] is not None:
                self._expect(node["cond"], BOOL)
            if node["update"] is not None:
                self._stmt(node["update"])
            self._stmt(node["body"])
        elif kind == "require":
            self._expect(node["cond"], BOOL)
        elif kind == "emit":
            for arg, p in zip(node["args"], node.resolved.node["params"]):
                self._expect(arg, p["var_type"])
        elif kind == "return":
            returns = self.function["returns"]
            if node["value"] is None:
                if returns is not None:
                    raise TypeCheckError(f"function must return a value of type {returns}", node.span)
            else:
                if returns is None:
                    raise TypeCheckError("function without 'returns' cannot return a value", node.span)
                self._expect(node["value"], returns)
        elif kind == "expr_stmt":
            self._expr(node["expr"], allow_void=True)

    # --- expressions ---

    def _expect(self, node: AstNode, wanted: TypeRef):
        got = self._expr(node)
        if got != wanted:
            raise TypeCheckError(f"expected {wanted}, got {got}", node.span)

    def _expr(self, node: AstNode, allow_void: bool = False) -> Optional[TypeRef]:
        t = self._infer(node, allow_void)
        node.type = t
        return t

    def _infer(self, node: AstNode, allow_void: bool) -> Optional[TypeRef]:
        kind = node.kind
        if kind == "number":
            if node["value"] > MASK:
                raise TypeCheckError("literal does not fit in a 64-bit word", node.span)
            return UINT
        if kind == "bool":
            return BOOL
        if kind == "msg_sender":
            return ADDRESS
        if kind == "ident":
            sym = node.resolved
            if sym.type.kind == "mapping":
                raise TypeCheckError(f"mapping '{sym.name}' must be indexed", node.span)
            return sym.type
        if kind == "index":
            base = node["base"]
            if base.kind != "ident" or base.resolved.kind != "state" or base.resolved.type.kind != "mapping":
                raise TypeCheckError("only state mappings can be indexed", base.span)
            mtype = base.type = base.resolved.type
            self._expect(node["key"], mtype.key)
            return mtype.value
        if kind == "unary":
            if node["op"] == "!":
                self._expect(node["operand"], BOOL)
                return BOOL
            self._expect(node["operand"], UINT)
            return UINT
        if kind == "binary":
            op = node["op"]
            if op in LOGICAL:
                self._expect(node["left"], BOOL)
                self._expect(node["right"], BOOL)
                return BOOL
            if op in ARITHMETIC:
                self._expect(node["left"], UINT)
                self._expect(node["right"], UINT)
                return UINT
            if op in ORDERING:
                self._expect(node["left"], UINT)
                self._expect(node["right"], UINT)
                return BOOL
            left = self._expr(node["left"])
            self._expect(node["right"], left)
            return BOOL
        if kind == "call":
            fn = node.resolved
            if fn.node["visibility"] == "external":
                raise TypeCheckError(f"external function '{fn.name}' cannot be called internally", node.span)
            for arg, p in zip(node["args"], fn.node["params"]):
                self._expect(arg, p["var_type"])
            if fn.type is None and not allow_void:
                raise TypeCheckError(f"function '{fn.name}' does not return a value", node.span)
            return fn.type
        raise TypeCheckError(f"unexpected expression {kind}", node.span)


def evaluate_constant(node: AstNode) -> int:
    """Fold a constant initialiser to a word"""
    kind = node.kind
    if kind == "number":
        return node["value"]
    if kind == "bool":
        return int(node["value"])
    if kind == "unary":
        value = evaluate_constant(node["operand"])
        return int(not value) if node["op"] == "!" else (-value) & MASK
    if kind == "binary":
        op = node["op"]
        a = evaluate_constant(node["left"])
        b = evaluate_constant(node["right"])
        if op == "&&":
            return int(bool(a) and bool(b))
        if op == "||":
            return int(bool(a) or bool(b))
        if op in SOURCE_CMPS:
            return apply_cmp(SOURCE_CMPS[op], a, b)
        if op in ("/", "%") and b == 0:
            raise TypeCheckError("division by zero in constant initialiser", node.span)
        return apply_binop(SOURCE_BINOPS[op], a, b)
    raise TypeCheckError("state variable initialisers must be constant expressions", node.span)


def check_types(table: SymbolTable) -> Dict[int, int]:
    return TypeChecker(table).check()
