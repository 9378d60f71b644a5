"""
Lexer - MiniSol source text to tokens with byte-offset spans
"""

from dataclasses import dataclass
from typing import List

from model.errors import UnknownCharacter, UnterminatedComment, UnterminatedString
from model.span import SourceSpan

KEYWORDS = {
    "contract", "function", "modifier", "event", "mapping",
    "uint", "bool", "address", "returns", "return",
    "if", "else", "while", "for", "require", "emit",
    "true", "false", "internal", "external",
}

# longest first
PUNCTUATION = [
    "=>", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>",
    "{", "}", "(", ")", "[", "]", ";", ",", "=", "+", "-", "*", "/", "%",
    "<", ">", "!", "&", "|", "^", ".",
]

_IDENT_START = set(b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_$")
_IDENT_REST = _IDENT_START | set(b"0123456789")
_DIGITS = set(b"0123456789")
_HEX = set(b"0123456789abcdefABCDEF")
_SPACE = set(b" \t\r\n\f\v")


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | number | punct | string
    text: str
    span: SourceSpan

    def is_(self, kind: str, text: str = None) -> bool:
        return self.kind == kind and (text is None or self.text == text)

    def __repr__(self):
        return f"{self.kind} {self.text!r} @({self.span.start},{self.span.length})"


def tokenize(source_text: str, file_index: int = 0) -> List[Token]:
    """Split source into tokens; comments are skipped but still count in offsets"""
    data = source_text.encode("utf-8")
    tokens: List[Token] = []
    n = len(data)
    i = 0

    def make(kind: str, start: int, end: int) -> Token:
        return Token(kind, data[start:end].decode("utf-8"), SourceSpan(start, end - start, file_index))

    while i < n:
        c = data[i]

        if c in _SPACE:
            i += 1
            continue

        # comments
        if data.startswith(b"//", i):
            nl = data.find(b"\n", i)
            i = n if nl < 0 else nl + 1
            continue
        if data.startswith(b"/*", i):
            close = data.find(b"*/", i + 2)
            if close < 0:
                raise UnterminatedComment(i, SourceSpan(i, 2, file_index))
            i = close + 2
            continue

        if c in _IDENT_START:
            j = i + 1
            while j < n and data[j] in _IDENT_REST:
                j += 1
            tok = make("ident", i, j)
            if tok.text in KEYWORDS:
                tok = Token("keyword", tok.text, tok.span)
            tokens.append(tok)
            i = j
            continue

        if c in _DIGITS:
            j = i + 1
            if c == ord("0") and j < n and data[j] in b"xX":
                j += 1
                while j < n and data[j] in _HEX:
                    j += 1
            else:
                while j < n and data[j] in _DIGITS:
                    j += 1
            tokens.append(make("number", i, j))
            i = j
            continue

        if c == ord('"'):
            j = i + 1
            while j < n and data[j] != ord('"'):
                if data[j] == ord("\\"):
                    j += 1
                if data[j:j + 1] == b"\n":
                    break
                j += 1
            if j >= n or data[j] != ord('"'):
                raise UnterminatedString(i, SourceSpan(i, 1, file_index))
            tokens.append(make("string", i, j + 1))
            i = j + 1
            continue

        for punct in PUNCTUATION:
            if data.startswith(punct.encode(), i):
                tokens.append(make("punct", i, i + len(punct)))
                i += len(punct)
                break
        else:
            raise UnknownCharacter(i, SourceSpan(i, 1, file_index))

    return tokens


def string_value(token: Token) -> str:
    """Unquote a string literal token"""
    body = token.text[1:-1]
    out = []
    k = 0
    while k < len(body):
        ch = body[k]
        if ch == "\\" and k + 1 < len(body):
            nxt = body[k + 1]
            out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(nxt, nxt))
            k += 2
            continue
        out.append(ch)
        k += 1
    return "".join(out)
