"""Parsing of numeric answers into exact rationals (or floats) and comparison."""

from __future__ import annotations

import math
import re
import unicodedata
from fractions import Fraction
from typing import Union

from ..errors import ParseFailure

Number = Union[Fraction, float]

UNIT_TOKENS = ("₩", "원", "명", "km", "kg")
_DELIMS = ("$", "\\(", "\\)", "\\[", "\\]", "\\!", "\\,", "\\;", "\\left", "\\right")
_TOKEN = re.compile(
    r"""
    (?P<num>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d*)?|\.\d+)
  | (?P<cmd>\\[a-zA-Z]+)
  | (?P<op>[-+*/^%{}()])
    """,
    re.X,
)


def _strip_units(text: str) -> str:
    changed = True
    while changed:
        changed = False
        text = text.strip()
        for unit in UNIT_TOKENS:
            if text.endswith(unit):
                text = text[: -len(unit)]
                changed = True
            if text.startswith(unit):
                text = text[len(unit) :]
                changed = True
    return text


def _clean(text: str) -> str:
    text = unicodedata.normalize("NFC", text).strip()
    text = text.replace("\\dfrac", "\\frac").replace("\\tfrac", "\\frac").replace("\\%", "%")
    for d in _DELIMS:
        text = text.replace(d, "")
    boxed = re.fullmatch(r"\s*\\boxed\{(.*)\}\s*", text)
    if boxed:
        text = boxed.group(1)
    text = text.strip().rstrip(".")
    text = _strip_units(text)
    return re.sub(r"\s+", "", text)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseFailure(f"unexpected {text[pos:pos + 8]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, value: str | None = None) -> tuple[str, str]:
        tok = self.peek()
        if tok is None or (value is not None and tok[1] != value):
            raise ParseFailure(f"expected {value or 'token'}, got {tok[1] if tok else 'end of input'}")
        self.i += 1
        return tok

    def parse(self) -> Number:
        value = self.expr()
        if self.peek() is not None:
            raise ParseFailure(f"trailing input at {self.peek()[1]!r}")
        return value

    def expr(self) -> Number:
        value = self.term()
        while (tok := self.peek()) and tok[1] in "+-" and tok[0] == "op":
            self.take()
            rhs = self.term()
            value = value + rhs if tok[1] == "+" else value - rhs
        return value

    def term(self) -> Number:
        value = self.unary()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "*/":
            self.take()
            rhs = self.unary()
            if tok[1] == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise ParseFailure("division by zero")
                value = value / rhs
        return value

    def unary(self) -> Number:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in "+-":
            self.take()
            inner = self.unary()
            return -inner if tok[1] == "-" else inner
        return self.power()

    def power(self) -> Number:
        base = self.postfix()
        tok = self.peek()
        if tok and tok[1] == "^":
            self.take()
            exponent = self._exponent()
            if base == 0 and exponent < 0:
                raise ParseFailure("zero to a negative power")
            return base**exponent
        return base

    def _exponent(self) -> int:
        braced = self.peek() is not None and self.peek()[1] == "{"
        if braced:
            self.take("{")
        sign = 1
        if self.peek() and self.peek()[1] in "+-":
            sign = -1 if self.take()[1] == "-" else 1
        kind, text = self.take()
        if kind != "num" or not text.isdigit():
            raise ParseFailure(f"exponent must be an integer, got {text!r}")
        if braced:
            self.take("}")
        return sign * int(text)

    def postfix(self) -> Number:
        value = self.atom()
        while self.peek() and self.peek()[1] == "%":
            self.take()
            value = value / 100
        return value

    def _argument(self) -> Number:
        tok = self.peek()
        if tok and tok[1] == "{":
            return self.group()
        kind, text = self.take()
        # \frac12 style single-character arguments
        if kind == "num" and text.isdigit():
            if len(text) > 1:
                self.tokens.insert(self.i, ("num", text[1:]))
            return Fraction(int(text[0]))
        raise ParseFailure(f"bad argument {text!r}")

    def group(self) -> Number:
        opener = self.take()[1]
        if opener not in "{(":
            raise ParseFailure(f"unexpected {opener!r}")
        value = self.expr()
        self.take("}" if opener == "{" else ")")
        return value

    def atom(self) -> Number:
        tok = self.peek()
        if tok is None:
            raise ParseFailure("empty expression")
        kind, text = tok
        if kind == "num":
            self.take()
            return Fraction(text.replace(",", ""))
        if kind == "cmd":
            self.take()
            if text == "\\frac":
                num = self._argument()
                den = self._argument()
                if den == 0:
                    raise ParseFailure("division by zero")
                return num / den
            if text == "\\sqrt":
                return _sqrt(self._argument())
            raise ParseFailure(f"unsupported command {text}")
        if text in "{(":
            return self.group()
        raise ParseFailure(f"unexpected {text!r}")


def _isqrt_exact(n: int) -> int | None:
    root = math.isqrt(n)
    return root if root * root == n else None


def _sqrt(value: Number) -> Number:
    if value < 0:
        raise ParseFailure("square root of a negative number")
    if isinstance(value, Fraction):
        num, den = _isqrt_exact(value.numerator), _isqrt_exact(value.denominator)
        if num is not None and den is not None:
            return Fraction(num, den)
    return math.sqrt(value)


def parse_math_value(text: str) -> Number:
    """Parse a numeric answer.

    Handles signs, comma thousands separators, decimals, ``a/b``,
    ``\\frac{a}{b}``, ``\\sqrt{n}``, integer powers, percentages and
    surrounding currency/unit tokens. Results stay exact ``Fraction``s unless
    an irrational square root forces a float.
    """
    if not isinstance(text, str):
        raise ParseFailure("not a string")
    cleaned = _clean(text)
    if not cleaned:
        raise ParseFailure(f"no value in {text!r}")
    return _Parser(_tokenize(cleaned)).parse()


def render_math_value(value: Number) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def values_equal(a: Number, b: Number) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    fa, fb = float(a), float(b)
    return abs(fa - fb) <= max(1e-9, 1e-6 * max(abs(fa), abs(fb)))
