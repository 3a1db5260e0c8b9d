"""Condition expression language used by starting conditions and Function nodes.

Grammar (EBNF)::

    expr  := or
    or    := and ("||" and)*
    and   := unary ("&&" unary)*
    unary := "!" unary | cmp
    cmp   := term (COP term)?
    term  := literal | ref | call | "(" expr ")"
    ref   := SCOPE "." IDENT
    SCOPE := "turn" | "session" | "user" | "community"

COP is one of ``== != < <= > >=``.  Literals: ``true``, ``false``, ``null``,
integers, decimals, double-quoted strings.  Built-ins: ``defined(ref)``,
``contains(haystack, needle)``, ``len(x)``.

Expressions are side-effect free and total: evaluation walks the finite AST
once, so it always terminates.  Type mismatches raise :class:`EvalError`
instead of being coerced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Protocol, Union

SCOPES = ("turn", "session", "user", "community")

# A condition value: JSON-style scalars plus dicts for structured entity values.
Value = Union[None, bool, int, float, str, dict]


class ConditionError(Exception):
    """Base class for condition language errors."""


class ParseError(ConditionError):
    """Syntax error, with a 1-based character position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (position {pos})")
        self.message = message
        self.pos = pos


class EvalError(ConditionError):
    """Runtime type or built-in error during evaluation."""


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Ref:
    scope: str
    name: str

    def __str__(self) -> str:
        return f"{self.scope}.{self.name}"


@dataclass(frozen=True)
class Cmp:
    op: str  # == != < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Lit, Ref, Cmp, And, Or, Not, Call]

TRUE = Lit(True)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<decimal>-?\d+\.\d+)
  | (?P<integer>-?\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|\||&&|==|!=|<=|>=|<|>|!)
  | (?P<punct>[().,])
    """,
    re.VERBOSE,
)

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


@dataclass
class _Token:
    kind: str
    text: str
    pos: int  # 1-based


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", i + 1)
        kind = m.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, m.group(0), i + 1))
        i = m.end()
    tokens.append(_Token("eof", "", len(text) + 1))
    return tokens


def _unescape(raw: str, pos: int) -> str:
    out = []
    i = 1
    while i < len(raw) - 1:
        c = raw[i]
        if c == "\\":
            i += 1
            esc = raw[i]
            if esc not in _ESCAPES:
                raise ParseError(f"bad string escape \\{esc}", pos + i)
            out.append(_ESCAPES[esc])
        else:
            out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, text: str) -> _Token:
        if self.cur.text != text:
            raise ParseError(f"expected {text!r}", self.cur.pos)
        return self._advance()

    def parse(self) -> Expr:
        expr = self.parse_or()
        if self.cur.kind != "eof":
            raise ParseError(f"unexpected token {self.cur.text!r}", self.cur.pos)
        return expr

    def parse_or(self) -> Expr:
        node = self.parse_and()
        while self.cur.text == "||":
            self._advance()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Expr:
        node = self.parse_unary()
        while self.cur.text == "&&":
            self._advance()
            node = And(node, self.parse_unary())
        return node

    def parse_unary(self) -> Expr:
        if self.cur.text == "!":
            self._advance()
            return Not(self.parse_unary())
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        left = self.parse_term()
        if self.cur.text in ("==", "!=", "<", "<=", ">", ">="):
            op = self._advance().text
            right = self.parse_term()
            return Cmp(op, left, right)
        return left

    def parse_term(self) -> Expr:
        tok = self.cur
        if tok.text == "(":
            self._advance()
            inner = self.parse_or()
            self._expect(")")
            return inner
        if tok.kind == "integer":
            self._advance()
            return Lit(int(tok.text))
        if tok.kind == "decimal":
            self._advance()
            return Lit(float(tok.text))
        if tok.kind == "string":
            self._advance()
            return Lit(_unescape(tok.text, tok.pos))
        if tok.kind == "ident":
            return self._parse_ident()
        raise ParseError("expected a value, reference or '('", tok.pos)

    def _parse_ident(self) -> Expr:
        tok = self._advance()
        word = tok.text
        if word == "true":
            return Lit(True)
        if word == "false":
            return Lit(False)
        if word == "null":
            return Lit(None)
        if self.cur.text == "(":
            self._advance()
            args = []
            if self.cur.text != ")":
                args.append(self.parse_or())
                while self.cur.text == ",":
                    self._advance()
                    args.append(self.parse_or())
            self._expect(")")
            return Call(word, tuple(args))
        if word in SCOPES:
            self._expect(".")
            name = self.cur
            if name.kind != "ident":
                raise ParseError("expected attribute name after '.'", name.pos)
            self._advance()
            return Ref(word, name.text)
        raise ParseError(f"unknown identifier {word!r}", tok.pos)


def parse_condition(text: str) -> Expr:
    """Parse ``text`` into an expression AST, raising :class:`ParseError`."""
    return _Parser(text).parse()


class AttributeView(Protocol):
    """Read access to scoped attributes; unset references resolve to None."""

    def get(self, scope: str, name: str) -> Value: ...


class MappingView:
    """AttributeView over a plain ``{"scope.name": value}`` mapping."""

    def __init__(self, values: Optional[dict] = None):
        self.values = values or {}

    def get(self, scope: str, name: str) -> Value:
        return self.values.get(f"{scope}.{name}")


def _type_label(value: Value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    return "object"


def _require_bool(value: Value, what: str) -> bool:
    if not isinstance(value, bool):
        raise EvalError(f"{what} requires a boolean, got {_type_label(value)}")
    return value


def _compare(op: str, left: Value, right: Value) -> bool:
    if op in ("==", "!="):
        if left is None or right is None:
            eq = left is None and right is None
        elif _type_label(left) != _type_label(right):
            raise EvalError(
                f"type-mismatch: cannot compare {_type_label(left)} with {_type_label(right)}"
            )
        else:
            eq = left == right
        return eq if op == "==" else not eq
    # Ordering: numbers with numbers, strings with strings.
    ok_numbers = (
        isinstance(left, (int, float))
        and not isinstance(left, bool)
        and isinstance(right, (int, float))
        and not isinstance(right, bool)
    )
    ok_strings = isinstance(left, str) and isinstance(right, str)
    if not (ok_numbers or ok_strings):
        raise EvalError(
            f"type-mismatch: cannot order {_type_label(left)} and {_type_label(right)}"
        )
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    return left >= right


def eval_condition(expr: Expr, ctx: AttributeView) -> Value:
    """Evaluate ``expr`` against ``ctx``.  Pure; raises :class:`EvalError` on
    type mismatches or unknown built-ins.  ``&&``/``||`` short-circuit."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Ref):
        return ctx.get(expr.scope, expr.name)
    if isinstance(expr, Not):
        return not _require_bool(eval_condition(expr.operand, ctx), "'!'")
    if isinstance(expr, And):
        left = _require_bool(eval_condition(expr.left, ctx), "'&&'")
        if not left:
            return False
        return _require_bool(eval_condition(expr.right, ctx), "'&&'")
    if isinstance(expr, Or):
        left = _require_bool(eval_condition(expr.left, ctx), "'||'")
        if left:
            return True
        return _require_bool(eval_condition(expr.right, ctx), "'||'")
    if isinstance(expr, Cmp):
        return _compare(expr.op, eval_condition(expr.left, ctx), eval_condition(expr.right, ctx))
    if isinstance(expr, Call):
        return _eval_call(expr, ctx)
    raise EvalError(f"unknown expression node {type(expr).__name__}")


def _eval_call(call: Call, ctx: AttributeView) -> Value:
    if call.name == "defined":
        if len(call.args) != 1 or not isinstance(call.args[0], Ref):
            raise EvalError("defined() takes exactly one attribute reference")
        return ctx.get(call.args[0].scope, call.args[0].name) is not None
    if call.name == "contains":
        if len(call.args) != 2:
            raise EvalError("contains() takes exactly two arguments")
        haystack = eval_condition(call.args[0], ctx)
        needle = eval_condition(call.args[1], ctx)
        if not isinstance(haystack, str) or not isinstance(needle, str):
            raise EvalError("contains() requires string arguments")
        return needle in haystack
    if call.name == "len":
        if len(call.args) != 1:
            raise EvalError("len() takes exactly one argument")
        value = eval_condition(call.args[0], ctx)
        if not isinstance(value, str):
            raise EvalError("len() requires a string argument")
        return len(value)
    raise EvalError(f"unknown built-in {call.name!r}")
