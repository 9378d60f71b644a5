"""
Compilation unit - tokenize, parse, resolve and register every file
"""

from dataclasses import dataclass, field
from typing import List, Tuple

from frontend.ast_nodes import AstNode
from frontend.lexer import tokenize
from frontend.parser import parse
from frontend.registry import StatementRegistry, build_statement_registry
from frontend.resolver import SymbolTable, resolve


@dataclass
class CompilationUnit:
    """
    Attributes:
        files: (name, text) per file index
        roots: one `source` AST per file
        table: resolved symbols
        registry: statement registry of the whole unit
    """
    files: List[Tuple[str, str]]
    roots: List[AstNode] = field(default_factory=list)
    table: SymbolTable = None
    registry: StatementRegistry = None

    @property
    def file_names(self) -> List[str]:
        return [name for name, _ in self.files]

    @property
    def file_texts(self) -> List[str]:
        return [text for _, text in self.files]


def analyze(files: List[Tuple[str, str]]) -> CompilationUnit:
    """Front half of the pipeline; node ids stay dense across files"""
    unit = CompilationUnit(list(files))
    next_id = 0
    for index, (_, text) in enumerate(unit.files):
        root = parse(tokenize(text, index), next_id)
        next_id = max(n.node_id for n in root.walk()) + 1
        unit.roots.append(root)
    unit.table = resolve(unit.roots)
    unit.registry = build_statement_registry(unit.roots, unit.table)
    return unit
