"""
Resolver - bind every identifier to its definition

Overloads are resolved by arity only; modifier invocations bind to modifier
definitions. Results are written onto the nodes (`node.resolved`).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from frontend.ast_nodes import AstNode, TypeRef
from model.errors import AmbiguousOverload, DuplicateDefinition, ParseError, ResolveError, UnknownName

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Symbol:
    """
    A named definition

    kind is one of: state, local, param, function, modifier, event
    """
    kind: str
    name: str
    node: AstNode
    contract: str
    type: Optional[TypeRef] = None
    slot: Optional[int] = None
    storage_name: Optional[str] = None

    @property
    def key(self) -> str:
        """Unique function key `Contract.name/arity`"""
        return f"{self.contract}.{self.name}/{len(self.node['params'])}"

    @property
    def arity(self) -> int:
        return len(self.node["params"] or [])

    def __repr__(self):
        return f"Symbol({self.kind} {self.contract}.{self.name})"


@dataclass
class ContractScope:
    name: str
    node: AstNode
    state_vars: Dict[str, Symbol] = field(default_factory=dict)
    functions: Dict[str, List[Symbol]] = field(default_factory=dict)
    modifiers: Dict[str, Symbol] = field(default_factory=dict)
    events: Dict[str, Symbol] = field(default_factory=dict)

    def all_functions(self) -> List[Symbol]:
        return [f for group in self.functions.values() for f in group]


@dataclass
class SymbolTable:
    contracts: Dict[str, ContractScope] = field(default_factory=dict)
    state_by_slot: Dict[int, Symbol] = field(default_factory=dict)

    def functions(self) -> List[Symbol]:
        return [f for c in self.contracts.values() for f in c.all_functions()]

    def function_by_key(self, key: str) -> Symbol:
        for fn in self.functions():
            if fn.key == key:
                return fn
        raise KeyError(key)


class Resolver:
    def __init__(self):
        self.table = SymbolTable()
        self.scopes: List[Dict[str, Symbol]] = []
        self.contract: Optional[ContractScope] = None
        self.next_slot = 0

    # --- declarations ---

    def declare_contracts(self, roots: List[AstNode]):
        for root in roots:
            for cnode in root["contracts"]:
                if cnode["name"] in self.table.contracts:
                    raise DuplicateDefinition(f"contract '{cnode['name']}' defined twice", cnode.span)
                scope = ContractScope(cnode["name"], cnode)
                self.table.contracts[scope.name] = scope
                for member in cnode["members"]:
                    self._declare_member(scope, member)

        # storage names are bare unless two contracts share a variable name
        counts: Dict[str, int] = {}
        for scope in self.table.contracts.values():
            for name in scope.state_vars:
                counts[name] = counts.get(name, 0) + 1
        for scope in self.table.contracts.values():
            for name, sym in scope.state_vars.items():
                sym.storage_name = name if counts[name] == 1 else f"{scope.name}.{name}"

    def _declare_member(self, scope: ContractScope, member: AstNode):
        name = member["name"]
        if member.kind == "state_var":
            if name in scope.state_vars:
                raise DuplicateDefinition(f"state variable '{name}' defined twice", member.span)
            sym = Symbol("state", name, member, scope.name, member["var_type"], slot=self.next_slot)
            self.table.state_by_slot[self.next_slot] = sym
            self.next_slot += 1
            scope.state_vars[name] = sym
        elif member.kind == "function":
            group = scope.functions.setdefault(name, [])
            signature = [p["var_type"] for p in member["params"]]
            for other in group:
                if [p["var_type"] for p in other.node["params"]] == signature:
                    raise DuplicateDefinition(f"function '{name}' defined twice with the same parameters",
                                              member.span)
            group.append(Symbol("function", name, member, scope.name, member["returns"]))
        elif member.kind == "modifier":
            if name in scope.modifiers:
                raise DuplicateDefinition(f"modifier '{name}' defined twice", member.span)
            scope.modifiers[name] = Symbol("modifier", name, member, scope.name)
        elif member.kind == "event":
            if name in scope.events:
                raise DuplicateDefinition(f"event '{name}' defined twice", member.span)
            scope.events[name] = Symbol("event", name, member, scope.name)
        member.resolved = self._member_symbol(scope, member)

    @staticmethod
    def _member_symbol(scope: ContractScope, member: AstNode) -> Optional[Symbol]:
        name = member["name"]
        if member.kind == "state_var":
            return scope.state_vars[name]
        if member.kind == "function":
            return next(f for f in scope.functions[name] if f.node is member)
        if member.kind == "modifier":
            return scope.modifiers[name]
        return scope.events.get(name)

    # --- scopes ---

    def _push(self):
        self.scopes.append({})

    def _pop(self):
        self.scopes.pop()

    def _declare_local(self, kind: str, node: AstNode) -> Symbol:
        name = node["name"]
        if name in self.scopes[-1]:
            raise DuplicateDefinition(f"'{name}' already declared in this scope", node.span)
        sym = Symbol(kind, name, node, self.contract.name, node["var_type"])
        self.scopes[-1][name] = sym
        node.resolved = sym
        return sym

    def _lookup(self, name: str, node: AstNode) -> Symbol:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        if name in self.contract.state_vars:
            return self.contract.state_vars[name]
        raise UnknownName(f"unknown name '{name}'", node.span)

    # --- bodies ---

    def resolve_bodies(self):
        for scope in self.table.contracts.values():
            self.contract = scope
            for member in scope.node["members"]:
                if member.kind == "state_var" and member["init"] is not None:
                    self._push()
                    self._expr(member["init"])
                    self._pop()
                elif member.kind == "event":
                    self._push()
                    for p in member["params"]:
                        self._declare_local("param", p)
                    self._pop()
                elif member.kind == "modifier":
                    self._modifier(member)
                elif member.kind == "function":
                    self._function(member)

    def _modifier(self, node: AstNode):
        placeholders = [n for n in node["body"].walk() if n.kind == "placeholder"]
        if len(placeholders) != 1:
            raise ParseError(f"modifier '{node['name']}' must contain exactly one '_;' "
                             f"(found {len(placeholders)})", node.span, ("_;",))
        self._push()
        for p in node["params"]:
            self._declare_local("param", p)
        self._stmt(node["body"], in_modifier=True)
        self._pop()

    def _function(self, node: AstNode):
        for p in node.walk():
            if p.kind == "placeholder":
                raise ParseError("'_;' is only allowed inside a modifier", p.span, ())
        self._push()
        for p in node["params"]:
            self._declare_local("param", p)
        for inv in node["modifiers"]:
            mod = self.contract.modifiers.get(inv["name"])
            if mod is None:
                raise UnknownName(f"unknown modifier '{inv['name']}'", inv.span)
            if len(inv["args"]) != len(mod.node["params"]):
                raise ResolveError(f"modifier '{inv['name']}' takes {len(mod.node['params'])} argument(s)",
                                   inv.span)
            inv.resolved = mod
            for arg in inv["args"]:
                self._expr(arg)
        self._stmt(node["body"])
        self._pop()

    def _stmt(self, node: AstNode, in_modifier: bool = False):
        kind = node.kind
        if kind == "block":
            self._push()
            for s in node["stmts"]:
                self._stmt(s, in_modifier)
            self._pop()
        elif kind == "var_decl":
            if node["init"] is not None:
                self._expr(node["init"])
            self._declare_local("local", node)
        elif kind == "assign":
            self._expr(node["target"])
            self._expr(node["value"])
        elif kind == "if":
            self._expr(node["cond"])
            self._scoped(node["then"], in_modifier)
            if node["else_"] is not None:
                self._scoped(node["else_"], in_modifier)
        elif kind == "while":
            self._expr(node["cond"])
            self._scoped(node["body"], in_modifier)
        elif kind == "for":
            self._push()
            if node["init"] is not None:
                self._stmt(node["init"], in_modifier)
            if node["cond"] is not None:
                self._expr(node["cond"])
            if node["update"] is not None:
                self._stmt(node["update"], in_modifier)
            self._scoped(node["body"], in_modifier)
            self._pop()
        elif kind == "require":
            self._expr(node["cond"])
        elif kind == "emit":
            event = self.contract.events.get(node["name"])
            if event is None:
                raise UnknownName(f"unknown event '{node['name']}'", node.span)
            if len(node["args"]) != len(event.node["params"]):
                raise ResolveError(f"event '{node['name']}' takes {len(event.node['params'])} argument(s)",
                                   node.span)
            node.resolved = event
            for arg in node["args"]:
                self._expr(arg)
        elif kind == "return":
            if in_modifier:
                raise ParseError("'return' is not allowed inside a modifier", node.span, ())
            if node["value"] is not None:
                self._expr(node["value"])
        elif kind == "expr_stmt":
            self._expr(node["expr"])
        elif kind == "placeholder":
            pass

    def _scoped(self, node: AstNode, in_modifier: bool):
        self._push()
        self._stmt(node, in_modifier)
        self._pop()

    def _expr(self, node: AstNode):
        kind = node.kind
        if kind == "ident":
            node.resolved = self._lookup(node["name"], node)
        elif kind == "call":
            node.resolved = self._resolve_call(node)
            for arg in node["args"]:
                self._expr(arg)
        elif kind == "binary":
            self._expr(node["left"])
            self._expr(node["right"])
        elif kind == "unary":
            self._expr(node["operand"])
        elif kind == "index":
            self._expr(node["base"])
            self._expr(node["key"])

    def _resolve_call(self, node: AstNode) -> Symbol:
        name = node["name"]
        group = self.contract.functions.get(name)
        if not group:
            raise UnknownName(f"unknown function '{name}'", node.span)
        candidates = [f for f in group if f.arity == len(node["args"])]
        if not candidates:
            raise UnknownName(f"no overload of '{name}' takes {len(node['args'])} argument(s)", node.span)
        if len(candidates) > 1:
            raise AmbiguousOverload(f"call to '{name}' matches {len(candidates)} overloads of arity "
                                    f"{len(node['args'])}", node.span)
        return candidates[0]


def resolve(roots: List[AstNode]) -> SymbolTable:
    """Bind names across all files of a compilation unit"""
    resolver = Resolver()
    resolver.declare_contracts(roots)
    resolver.resolve_bodies()
    logger.debug("[FRONTEND] resolved %d function(s)", len(resolver.table.functions()))
    return resolver.table
