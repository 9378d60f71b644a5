"""
Errors - every failure the toolchain raises

All errors derive from ValueError so callers that only know about bad input
keep working.
"""

from typing import Optional


class ZkMapError(ValueError):
    """Base class for every toolchain error"""


class ConfigError(ZkMapError):
    """Rejected pass configuration or command-line input"""


# ---------------------------------------------------------------- compile

class CompileError(ZkMapError):
    """An error tied to a location in the source text"""

    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def describe(self, files: Optional[list] = None) -> str:
        """Render as `file:line:col: message` when the source text is known"""
        if self.span is None or not files or self.span.file >= len(files):
            return self.message
        name, text = files[self.span.file]
        line, col = self.span.line_col(text)
        return f"{name}:{line}:{col}: {self.message}"


class LexError(CompileError):
    pass


class UnknownCharacter(LexError):
    def __init__(self, offset: int, span=None):
        super().__init__(f"unknown character at offset {offset}", span)
        self.offset = offset


class UnterminatedString(LexError):
    def __init__(self, offset: int, span=None):
        super().__init__(f"unterminated string starting at offset {offset}", span)
        self.offset = offset


class UnterminatedComment(LexError):
    def __init__(self, offset: int, span=None):
        super().__init__(f"unterminated comment starting at offset {offset}", span)
        self.offset = offset


class ParseError(CompileError):
    def __init__(self, message: str, span=None, expected=()):
        super().__init__(message, span)
        self.expected = tuple(expected)


class ResolveError(CompileError):
    pass


class UnknownName(ResolveError):
    pass


class AmbiguousOverload(ResolveError):
    pass


class DuplicateDefinition(ResolveError):
    pass


class TypeCheckError(CompileError):
    pass


class MissingReturn(CompileError):
    pass


# ---------------------------------------------------------------- codec

class CodecError(ZkMapError):
    pass


class MalformedField(CodecError):
    pass


class DanglingInheritance(CodecError):
    pass


# ---------------------------------------------------------------- backend

class BackendError(ZkMapError):
    pass


class JumpTargetOverflow(BackendError):
    pass


class UnencodableConstant(BackendError):
    pass


class StackTooDeep(BackendError):
    pass


class TruncatedImmediate(BackendError):
    pass


# ---------------------------------------------------------------- mapping

class MappingError(ZkMapError):
    pass


class DanglingIrId(MappingError):
    pass


class OffsetOutOfRange(MappingError):
    pass


class TableMismatch(MappingError):
    pass


# ---------------------------------------------------------------- execution

class ExecutionError(ZkMapError):
    pass


class StepLimit(ExecutionError):
    pass


class CallDepthLimit(ExecutionError):
    """Too many recursive activations live at once"""


class InvalidJump(ExecutionError):
    pass


class StackUnderflow(ExecutionError):
    pass


# ---------------------------------------------------------------- ir

class IrError(ZkMapError):
    """Malformed IR: broken SSA, dangling labels, misplaced terminators"""
