"""
AST - MiniSol syntax tree; every node carries its SourceSpan
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Optional

from model.span import SourceSpan

STATEMENT_KINDS = {
    "var_decl", "assign", "if", "while", "for", "require",
    "emit", "return", "expr_stmt",
}

EXPRESSION_KINDS = {
    "number", "bool", "ident", "msg_sender", "binary", "unary", "call", "index",
}


@dataclass(frozen=True)
class TypeRef:
    """uint | bool | address | mapping(key => value)"""
    kind: str
    key: Optional["TypeRef"] = None
    value: Optional["TypeRef"] = None

    def __str__(self):
        if self.kind == "mapping":
            return f"mapping({self.key} => {self.value})"
        return self.kind


UINT = TypeRef("uint")
BOOL = TypeRef("bool")
ADDRESS = TypeRef("address")


@dataclass(eq=False)
class AstNode:
    """
    A syntax tree node

    `fields` holds named children (nodes or lists of nodes) and plain
    attributes; `children` walks the node-valued ones in declaration order.
    """
    kind: str
    span: SourceSpan
    fields: Dict[str, Any] = field(default_factory=dict)
    node_id: int = -1
    resolved: Any = None
    type: Optional[TypeRef] = None

    def __getitem__(self, name: str):
        return self.fields.get(name)

    @property
    def children(self) -> Iterator["AstNode"]:
        for value in self.fields.values():
            if isinstance(value, AstNode):
                yield value
            elif isinstance(value, list):
                for item in value:
                    if isinstance(item, AstNode):
                        yield item

    def walk(self) -> Iterator["AstNode"]:
        """Pre-order traversal"""
        yield self
        for child in self.children:
            yield from child.walk()

    @property
    def is_statement(self) -> bool:
        return self.kind in STATEMENT_KINDS

    @property
    def is_expression(self) -> bool:
        return self.kind in EXPRESSION_KINDS

    def __repr__(self):
        name = self.fields.get("name")
        label = f" {name}" if isinstance(name, str) else ""
        return f"AstNode(#{self.node_id} {self.kind}{label} @{self.span.to_triple()})"


def assign_node_ids(root: AstNode, start: int = 0) -> int:
    """Dense pre-order numbering from `start`; returns the next free id"""
    count = start
    for node in root.walk():
        node.node_id = count
        count += 1
    return count
