"""A deliberately tiny arithmetic expression language for field definitions.

Grammar (one expression per field component, variables x, y, theta):

    expr    := term  (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := primary ('^' unary)?           # binds right, tighter than '-'
    primary := NUMBER | CONST | VAR | FUNC '(' expr ')' | '(' expr ')'

    FUNC  in  sin cos exp sqrt abs
    CONST in  pi e
    VAR   in  x y theta

No user-defined functions, no comparison operators, no strings: the point is
a one-file component whose parse trees compile to vectorized numpy closures.
Parse errors carry the character position so the config layer can point at
the offending line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParseError

_FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
_CONSTANTS = {"pi": np.pi, "e": np.e}
_VARIABLES = ("x", "y", "theta")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num' | 'name' | 'op' | 'end'
    text: str
    pos: int


def _tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            stripped = src[i:].lstrip()
            if not stripped:
                break
            bad_pos = len(src) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", column=bad_pos + 1)
        if m.lastgroup is None and not m.group().strip():
            i = m.end()
            continue
        kind = m.lastgroup
        text = m.group(kind) if kind else ""
        full = m.group(0)
        # keep any exponent suffix attached to numbers
        if kind == "num":
            text = full.strip()
        tokens.append(Token(kind, text, m.start(kind) if kind else i))
        i = m.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.take()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(
                f"expected {op!r}, found {tok.text or 'end of expression'!r}",
                column=tok.pos + 1,
            )

    # --- grammar ---------------------------------------------------------
    def parse(self) -> str:
        code = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing {tok.text!r}", column=tok.pos + 1)
        return code

    def expr(self) -> str:
        code = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            code = f"({code} {op} {self.term()})"
        return code

    def term(self) -> str:
        code = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            code = f"({code} {op} {self.unary()})"
        return code

    def unary(self) -> str:
        # unary minus binds looser than '^', so -x^2 means -(x^2)
        tok = self.peek()
        if tok.kind == "op" and tok.text in "+-":
            self.take()
            inner = self.unary()
            return f"(-{inner})" if tok.text == "-" else inner
        return self.power()

    def power(self) -> str:
        base = self.primary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            return f"({base} ** {self.unary()})"
        return base

    def primary(self) -> str:
        tok = self.take()
        if tok.kind == "num":
            return tok.text
        if tok.kind == "name":
            name = tok.text
            if self.peek().kind == "op" and self.peek().text == "(":
                if name not in _FUNCTIONS:
                    raise ParseError(f"unknown function {name!r}", column=tok.pos + 1)
                self.take()
                inner = self.expr()
                self.expect_op(")")
                return f"_f_{name}({inner})"
            if name in _CONSTANTS:
                return f"_c_{name}"
            if name in _VARIABLES:
                return name
            raise ParseError(f"unknown name {name!r}", column=tok.pos + 1)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(
            f"expected a value, found {tok.text or 'end of expression'!r}",
            column=tok.pos + 1,
        )


def compile_expression(src: str) -> Callable:
    """Compile an expression string to f(x, y, theta) over numpy arrays."""
    code = _Parser(src).parse()
    namespace = {f"_f_{k}": v for k, v in _FUNCTIONS.items()}
    namespace.update({f"_c_{k}": v for k, v in _CONSTANTS.items()})
    namespace["__builtins__"] = {}
    fn = eval(f"lambda x, y, theta: {code}", namespace)  # code built by our parser only

    def wrapped(x, y, theta):
        out = fn(x, y, theta)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x))

    wrapped.source = src  # type: ignore[attr-defined]
    return wrapped


def compile_field_components(components: list[str]):
    """Compile three component expressions into one (..., 3) field evaluator."""
    if len(components) != 3:
        raise ParseError(f"a field needs 3 components, got {len(components)}")
    fns = [compile_expression(c) for c in components]

    def func(pts: np.ndarray) -> np.ndarray:
        x, y, theta = pts[..., 0], pts[..., 1], pts[..., 2]
        return np.stack([f(x, y, theta) for f in fns], axis=-1)

    return func
