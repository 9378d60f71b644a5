"""
Parser - recursive descent over the MiniSol grammar

Every node spans exactly its source extent; statement spans include the
trailing ';'. The first error aborts.
"""

import logging
from typing import List, Optional

from frontend.ast_nodes import ADDRESS, BOOL, UINT, AstNode, TypeRef, assign_node_ids
from frontend.lexer import Token, string_value
from model.errors import ParseError
from model.span import SourceSpan

logger = logging.getLogger(__name__)

# binary precedence, lowest first
BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("|",),
    ("^",),
    ("&",),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]

TYPE_KEYWORDS = ("uint", "bool", "address", "mapping")


class Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.index = 0

    # --- token utilities ---

    def _peek(self, ahead: int = 0) -> Optional[Token]:
        pos = self.index + ahead
        return self.tokens[pos] if pos < len(self.tokens) else None

    def _last(self) -> Token:
        return self.tokens[self.index - 1]

    def _at_end(self) -> bool:
        return self.index >= len(self.tokens)

    def _check(self, kind: str, text: str = None) -> bool:
        tok = self._peek()
        return tok is not None and tok.is_(kind, text)

    def _check_punct(self, *texts: str) -> bool:
        tok = self._peek()
        return tok is not None and tok.kind == "punct" and tok.text in texts

    def _advance(self) -> Token:
        tok = self._peek()
        self.index += 1
        return tok

    def _error(self, expected) -> ParseError:
        expected = tuple(expected)
        wanted = " or ".join(repr(e) for e in expected)
        tok = self._peek()
        if tok is None:
            span = self.tokens[-1].span if self.tokens else SourceSpan(0, 1, 0)
            return ParseError(f"unexpected end of input, expected {wanted}", span, expected)
        return ParseError(f"expected {wanted}, got {tok.text!r}", tok.span, expected)

    def _expect(self, kind: str, text: str = None) -> Token:
        if not self._check(kind, text):
            raise self._error([text if text is not None else kind])
        return self._advance()

    def _punct(self, text: str) -> Token:
        return self._expect("punct", text)

    def _span_from(self, start: Token) -> SourceSpan:
        end = self._last().span
        return SourceSpan(start.span.start, end.end - start.span.start, start.span.file)

    def _node(self, kind: str, start: Token, **fields) -> AstNode:
        return AstNode(kind, self._span_from(start), fields)

    # --- entry point ---

    def parse_file(self) -> AstNode:
        if not self.tokens:
            raise self._error(["contract"])
        start = self._peek()
        contracts = [self._contract()]
        while not self._at_end():
            contracts.append(self._contract())
        return self._node("source", start, contracts=contracts)

    # --- declarations ---

    def _contract(self) -> AstNode:
        start = self._expect("keyword", "contract")
        name = self._expect("ident").text
        self._punct("{")
        members = []
        while not self._check_punct("}"):
            if self._at_end():
                raise self._error(["}"])
            members.append(self._member())
        self._punct("}")
        return self._node("contract", start, name=name, members=members)

    def _member(self) -> AstNode:
        if self._check("keyword", "function"):
            return self._function()
        if self._check("keyword", "modifier"):
            return self._modifier()
        if self._check("keyword", "event"):
            return self._event()
        if self._peek() is not None and self._peek().kind == "keyword" and self._peek().text in TYPE_KEYWORDS:
            return self._state_var()
        raise self._error(["function", "modifier", "event", "type"])

    def _type(self) -> TypeRef:
        tok = self._peek()
        if tok is None or tok.kind != "keyword" or tok.text not in TYPE_KEYWORDS:
            raise self._error(TYPE_KEYWORDS)
        self._advance()
        if tok.text == "mapping":
            self._punct("(")
            key = self._type()
            self._punct("=>")
            value = self._type()
            self._punct(")")
            return TypeRef("mapping", key, value)
        return {"uint": UINT, "bool": BOOL, "address": ADDRESS}[tok.text]

    def _state_var(self) -> AstNode:
        start = self._peek()
        var_type = self._type()
        name = self._expect("ident").text
        init = None
        if self._check_punct("="):
            self._advance()
            init = self._expression()
        self._punct(";")
        return self._node("state_var", start, name=name, var_type=var_type, init=init)

    def _params(self) -> List[AstNode]:
        self._punct("(")
        params = []
        if not self._check_punct(")"):
            while True:
                start = self._peek()
                ptype = self._type()
                name = self._expect("ident").text
                params.append(self._node("param", start, name=name, var_type=ptype))
                if not self._check_punct(","):
                    break
                self._advance()
        self._punct(")")
        return params

    def _function(self) -> AstNode:
        start = self._expect("keyword", "function")
        name = self._expect("ident").text
        params = self._params()

        modifiers = []
        while self._check("ident"):
            mstart = self._advance()
            args = self._call_args() if self._check_punct("(") else []
            modifiers.append(self._node("mod_invoke", mstart, name=mstart.text, args=args))

        visibility = None
        if self._check("keyword", "internal") or self._check("keyword", "external"):
            visibility = self._advance().text

        returns = None
        if self._check("keyword", "returns"):
            self._advance()
            self._punct("(")
            returns = self._type()
            self._punct(")")

        body = self._block()
        return self._node("function", start, name=name, params=params, modifiers=modifiers,
                          visibility=visibility, returns=returns, body=body,
                          end_span=self._last().span)

    def _modifier(self) -> AstNode:
        start = self._expect("keyword", "modifier")
        name = self._expect("ident").text
        params = self._params() if self._check_punct("(") else []
        body = self._block()
        return self._node("modifier", start, name=name, params=params, body=body)

    def _event(self) -> AstNode:
        start = self._expect("keyword", "event")
        name = self._expect("ident").text
        params = self._params()
        self._punct(";")
        return self._node("event", start, name=name, params=params)

    # --- statements ---

    def _block(self) -> AstNode:
        start = self._punct("{")
        stmts = []
        while not self._check_punct("}"):
            if self._at_end():
                raise self._error(["}"])
            stmts.append(self._statement())
        self._punct("}")
        return self._node("block", start, stmts=stmts)

    def _statement(self) -> AstNode:
        tok = self._peek()
        if tok is None:
            raise self._error(["statement"])
        if tok.is_("punct", "{"):
            return self._block()
        if tok.kind == "keyword":
            if tok.text == "if":
                return self._if()
            if tok.text == "while":
                return self._while()
            if tok.text == "for":
                return self._for()
            if tok.text == "require":
                return self._require()
            if tok.text == "emit":
                return self._emit()
            if tok.text == "return":
                return self._return()
            if tok.text in TYPE_KEYWORDS:
                return self._var_decl()
        if tok.is_("ident", "_") and self._peek(1) is not None and self._peek(1).is_("punct", ";"):
            self._advance()
            self._advance()
            return self._node("placeholder", tok)
        return self._simple_statement()

    def _var_decl(self, terminated: bool = True) -> AstNode:
        start = self._peek()
        var_type = self._type()
        name = self._expect("ident").text
        init = None
        if self._check_punct("="):
            self._advance()
            init = self._expression()
        if terminated:
            self._punct(";")
        return self._node("var_decl", start, name=name, var_type=var_type, init=init)

    def _simple_statement(self, terminated: bool = True) -> AstNode:
        """assignment or expression statement"""
        start = self._peek()
        expr = self._expression()
        if self._check_punct("="):
            if expr.kind not in ("ident", "index"):
                raise ParseError("left side of '=' must be a variable or an index expression",
                                 expr.span, ("identifier",))
            self._advance()
            value = self._expression()
            if terminated:
                self._punct(";")
            return self._node("assign", start, target=expr, value=value)
        if not terminated:
            raise self._error(["="])
        self._punct(";")
        return self._node("expr_stmt", start, expr=expr)

    def _if(self) -> AstNode:
        start = self._advance()
        self._punct("(")
        cond = self._expression()
        self._punct(")")
        then = self._statement()
        else_ = None
        if self._check("keyword", "else"):
            self._advance()
            else_ = self._statement()
        return self._node("if", start, cond=cond, then=then, else_=else_)

    def _while(self) -> AstNode:
        start = self._advance()
        self._punct("(")
        cond = self._expression()
        self._punct(")")
        body = self._statement()
        return self._node("while", start, cond=cond, body=body)

    def _for(self) -> AstNode:
        start = self._advance()
        self._punct("(")
        init = None
        if self._check_punct(";"):
            self._advance()
        elif self._peek() is not None and self._peek().kind == "keyword" and self._peek().text in TYPE_KEYWORDS:
            init = self._var_decl()
        else:
            init = self._simple_statement()
        cond = None
        if not self._check_punct(";"):
            cond = self._expression()
        self._punct(";")
        update = None
        if not self._check_punct(")"):
            update = self._simple_statement(terminated=False)
        self._punct(")")
        body = self._statement()
        return self._node("for", start, init=init, cond=cond, update=update, body=body)

    def _require(self) -> AstNode:
        start = self._advance()
        self._punct("(")
        cond = self._expression()
        message = None
        if self._check_punct(","):
            self._advance()
            message = string_value(self._expect("string"))
        self._punct(")")
        self._punct(";")
        return self._node("require", start, cond=cond, message=message)

    def _emit(self) -> AstNode:
        start = self._advance()
        name = self._expect("ident").text
        args = self._call_args()
        self._punct(";")
        return self._node("emit", start, name=name, args=args)

    def _return(self) -> AstNode:
        start = self._advance()
        value = None
        if not self._check_punct(";"):
            value = self._expression()
        self._punct(";")
        return self._node("return", start, value=value)

    # --- expressions ---

    def _expression(self) -> AstNode:
        return self._binary(0)

    def _binary(self, level: int) -> AstNode:
        if level >= len(BINARY_LEVELS):
            return self._unary()
        start = self._peek()
        left = self._binary(level + 1)
        while self._check_punct(*BINARY_LEVELS[level]):
            op = self._advance().text
            right = self._binary(level + 1)
            left = self._node("binary", start, op=op, left=left, right=right)
        return left

    def _unary(self) -> AstNode:
        if self._check_punct("!", "-"):
            start = self._advance()
            operand = self._unary()
            return self._node("unary", start, op=start.text, operand=operand)
        return self._postfix()

    def _call_args(self) -> List[AstNode]:
        self._punct("(")
        args = []
        if not self._check_punct(")"):
            while True:
                args.append(self._expression())
                if not self._check_punct(","):
                    break
                self._advance()
        self._punct(")")
        return args

    def _postfix(self) -> AstNode:
        start = self._peek()
        if self._check("ident") and self._peek(1) is not None and self._peek(1).is_("punct", "("):
            name = self._advance().text
            args = self._call_args()
            expr = self._node("call", start, name=name, args=args)
        else:
            expr = self._primary()
        while self._check_punct("["):
            self._advance()
            key = self._expression()
            self._punct("]")
            expr = self._node("index", start, base=expr, key=key)
        return expr

    def _primary(self) -> AstNode:
        tok = self._peek()
        if tok is None:
            raise self._error(["expression"])
        if tok.kind == "number":
            self._advance()
            return self._node("number", tok, value=int(tok.text, 0))
        if tok.is_("keyword", "true") or tok.is_("keyword", "false"):
            self._advance()
            return self._node("bool", tok, value=tok.text == "true")
        if tok.is_("ident", "msg"):
            self._advance()
            self._punct(".")
            self._expect("ident", "sender")
            return self._node("msg_sender", tok)
        if tok.kind == "ident":
            self._advance()
            return self._node("ident", tok, name=tok.text)
        if tok.is_("punct", "("):
            self._advance()
            inner = self._expression()
            self._punct(")")
            return inner
        raise self._error(["expression"])


def parse(tokens: List[Token], first_node_id: int = 0) -> AstNode:
    """Parse one file's tokens into a `source` root with pre-order node ids"""
    root = Parser(tokens).parse_file()
    assign_node_ids(root, first_node_id)
    logger.debug("[FRONTEND] parsed %d contract(s)", len(root["contracts"]))
    return root
