"""
Statement registry - the statement-level reference structure

One statement_id per statement node (its node_id), plus one implicit return
per function (the function's node_id, spanning its closing brace). The
statement CFG is a networkx DiGraph whose edges carry a `kind` attribute:
seq, branch, loop or call. Modifier bodies are expanded around `_;`.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

import networkx as nx

from frontend.ast_nodes import AstNode
from frontend.resolver import Symbol, SymbolTable
from model.span import SourceSpan

logger = logging.getLogger(__name__)

# (predecessor statement id, or an entry marker string) and the edge kind
Pred = Tuple[object, str]


@dataclass
class StatementRegistry:
    """
    Attributes:
        spans: statement_id -> SourceSpan
        kinds: statement_id -> statement kind ("implicit_return" for the synthetic exit)
        owner: statement_id -> key of the function or modifier it lives in
        cfg: statement control-flow graph
        entries: function key -> statement ids executed first
        implicit_returns: function key -> implicit return statement id
        expression_spans: spans of every expression and parameter node
    """
    spans: Dict[int, SourceSpan] = field(default_factory=dict)
    kinds: Dict[int, str] = field(default_factory=dict)
    owner: Dict[int, str] = field(default_factory=dict)
    cfg: nx.DiGraph = field(default_factory=nx.DiGraph)
    entries: Dict[str, List[int]] = field(default_factory=dict)
    implicit_returns: Dict[str, int] = field(default_factory=dict)
    expression_spans: Set[SourceSpan] = field(default_factory=set)
    _by_span: Dict[SourceSpan, int] = field(default_factory=dict, repr=False)
    _reach: Dict[Tuple[int, int], bool] = field(default_factory=dict, repr=False)

    def add(self, statement_id: int, span: SourceSpan, kind: str, owner: str):
        self.spans[statement_id] = span
        self.kinds[statement_id] = kind
        self.owner[statement_id] = owner
        self.cfg.add_node(statement_id)
        self._by_span.clear()

    def __contains__(self, statement_id: int) -> bool:
        return statement_id in self.spans

    def __len__(self) -> int:
        return len(self.spans)

    @property
    def statement_ids(self) -> List[int]:
        return sorted(self.spans)

    def registered_spans(self) -> Set[SourceSpan]:
        """Every span an instruction may legitimately carry"""
        return set(self.spans.values()) | self.expression_spans

    def statement_of_span(self, span: SourceSpan) -> Optional[int]:
        """Innermost registered statement whose span contains `span`"""
        if span in self._by_span:
            return self._by_span[span]
        best = None
        for sid, own in self.spans.items():
            if own.contains(span) and (best is None or own.length < self.spans[best].length):
                best = sid
        self._by_span[span] = best
        return best

    def reachable(self, a: int, b: int) -> bool:
        """True when b can execute after a (a == b counts)"""
        if a == b:
            return True
        key = (a, b)
        if key not in self._reach:
            self._reach[key] = (a in self.cfg and b in self.cfg and nx.has_path(self.cfg, a, b))
        return self._reach[key]

    def edges_of_kind(self, kind: str) -> List[Tuple[int, int]]:
        return [(a, b) for a, b, k in self.cfg.edges(data="kind") if k == kind]

    def body_statements(self, function_key: str) -> List[int]:
        return [sid for sid in self.statement_ids
                if self.owner[sid] == function_key and self.kinds[sid] != "implicit_return"]


class RegistryBuilder:
    def __init__(self, table: SymbolTable):
        self.table = table
        self.registry = StatementRegistry()
        self.function_key: Optional[str] = None
        self.pending_calls: List[Tuple[int, str]] = []
        self.returns: List[Pred] = []

    def build(self, roots: List[AstNode]) -> StatementRegistry:
        for root in roots:
            for node in root.walk():
                if node.is_expression or node.kind == "param":
                    self.registry.expression_spans.add(node.span)

        for fn in self.table.functions():
            self._function(fn)

        for caller, callee in self.pending_calls:
            self._link_call(caller, callee)
        logger.debug("[FRONTEND] registry: %d statement(s), %d edge(s)",
                     len(self.registry), self.registry.cfg.number_of_edges())
        return self.registry

    # --- graph helpers ---

    def _connect(self, preds: Iterable[Pred], target: int):
        for pred, kind in preds:
            if isinstance(pred, str):
                self.registry.entries[pred].append(target)
            else:
                self.registry.cfg.add_edge(pred, target, kind=kind)

    def _register(self, node: AstNode, preds: Iterable[Pred], owner: str) -> int:
        self.registry.add(node.node_id, node.span, node.kind, owner)
        self._connect(preds, node.node_id)
        for call in self._calls_in(node):
            self.pending_calls.append((node.node_id, call.resolved.key))
        return node.node_id

    @staticmethod
    def _calls_in(node: AstNode) -> List[AstNode]:
        """Calls evaluated by this statement itself (not by nested statements)"""
        found = []
        stack = [c for c in node.children if c.is_expression]
        while stack:
            expr = stack.pop()
            if expr.kind == "call":
                found.append(expr)
            stack.extend(expr.children)
        return found

    def _link_call(self, caller: int, callee_key: str):
        g = self.registry.cfg
        for first in self.registry.entries[callee_key]:
            g.add_edge(caller, first, kind="call")
        g.add_edge(self.registry.implicit_returns[callee_key], caller, kind="call")

    # --- functions and modifiers ---

    def _function(self, fn: Symbol):
        key = fn.key
        node = fn.node
        self.function_key = key
        self.registry.entries[key] = []
        exit_id = node.node_id
        self.registry.add(exit_id, node["end_span"], "implicit_return", key)
        self.registry.implicit_returns[key] = exit_id

        self.returns = []
        exits = self._modified(node, 0, [(key, "seq")])
        self._connect(exits, exit_id)
        if not self.registry.entries[key]:
            self.registry.entries[key].append(exit_id)

    def _modified(self, fn: AstNode, depth: int, preds: List[Pred]) -> List[Pred]:
        invocations = fn["modifiers"]
        if depth == len(invocations):
            self.returns = []
            exits = self._flow(fn["body"], preds, self.function_key)
            # a return continues after the innermost `_;` (or at the implicit return)
            return exits + self.returns
        invocation = invocations[depth]
        if invocation["args"]:
            preds = [(self._register(invocation, preds, self.function_key), "seq")]
        modifier = invocation.resolved
        return self._flow(modifier.node["body"], preds, modifier.contract + "." + modifier.name,
                          placeholder=lambda p: self._modified(fn, depth + 1, p))

    def _flow(self, node: AstNode, preds: List[Pred], owner: str, placeholder=None) -> List[Pred]:
        kind = node.kind
        if kind == "block":
            for stmt in node["stmts"]:
                preds = self._flow(stmt, preds, owner, placeholder)
            return preds
        if kind == "placeholder":
            return placeholder(preds)
        if kind == "if":
            head = self._register(node, preds, owner)
            exits = self._flow(node["then"], [(head, "branch")], owner, placeholder)
            if node["else_"] is not None:
                exits = exits + self._flow(node["else_"], [(head, "branch")], owner, placeholder)
            else:
                exits = exits + [(head, "branch")]
            return exits
        if kind == "while":
            head = self._register(node, preds, owner)
            body_exits = self._flow(node["body"], [(head, "branch")], owner, placeholder)
            self._connect([(p, "loop") for p, _ in body_exits], head)
            return [(head, "branch")]
        if kind == "for":
            if node["init"] is not None:
                preds = self._flow(node["init"], preds, owner, placeholder)
            head = self._register(node, preds, owner)
            body_exits = self._flow(node["body"], [(head, "branch")], owner, placeholder)
            if node["update"] is not None:
                body_exits = self._flow(node["update"], body_exits, owner, placeholder)
            self._connect([(p, "loop") for p, _ in body_exits], head)
            return [(head, "branch")]
        if kind == "return":
            sid = self._register(node, preds, owner)
            self.returns = self.returns + [(sid, "seq")]
            return []
        # var_decl, assign, require, emit, expr_stmt
        sid = self._register(node, preds, owner)
        return [(sid, "seq")]


def build_statement_registry(roots: List[AstNode], table: SymbolTable) -> StatementRegistry:
    """Statements and statement CFG for a resolved compilation unit"""
    return RegistryBuilder(table).build(roots)
