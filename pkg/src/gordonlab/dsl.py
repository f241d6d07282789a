"""Parser for the potential DSL.

::

    potential := term ( "+" term )*
    term      := [ number "*" ] atom
    atom      := "step{" pair ("," pair)* "}" | "cos(" int "," number "," number ")"
               | "sing(" number "," number ")" | "zero"
    pair      := rational ":" number
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import DomainError, DSLSyntaxError
from .potentials import ZERO, PeriodicPotential, PowerSingular, Smooth, Step, Sum

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?")
_INT = re.compile(r"\d+")


class DSLSemanticError(DSLSyntaxError):
    """Well-formed input describing an invalid potential."""


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message, expected=None, pos=None):
        return DSLSyntaxError(message, self.text, self.pos if pos is None else pos, expected)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, literal: str) -> bool:
        self.skip()
        return self.text.startswith(literal, self.pos)

    def expect(self, literal: str):
        self.skip()
        if not self.text.startswith(literal, self.pos):
            found = self.text[self.pos:self.pos + 8] or "end of input"
            raise self.error(f"unexpected {found!r}", expected=repr(literal))
        self.pos += len(literal)

    def number(self) -> Fraction:
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            found = self.text[self.pos:self.pos + 8] or "end of input"
            raise self.error(f"unexpected {found!r}", expected="number")
        self.pos = m.end()
        try:
            return Fraction(m.group())
        except ZeroDivisionError:
            raise self.error("zero denominator", pos=m.start()) from None

    def integer(self) -> int:
        self.skip()
        m = _INT.match(self.text, self.pos)
        if not m:
            found = self.text[self.pos:self.pos + 8] or "end of input"
            raise self.error(f"unexpected {found!r}", expected="non-negative integer")
        self.pos = m.end()
        return int(m.group())

    def potential(self) -> PeriodicPotential:
        terms = [self.term()]
        while self.peek("+"):
            self.expect("+")
            terms.append(self.term())
        self.skip()
        if self.pos != len(self.text):
            raise self.error(f"unexpected {self.text[self.pos:self.pos + 8]!r}", expected="'+' or end of input")
        if len(terms) == 1 and terms[0][0] == 1:
            return terms[0][1]
        return Sum.of(terms)

    def term(self):
        self.skip()
        coef = Fraction(1)
        if _NUMBER.match(self.text, self.pos):
            coef = self.number()
            self.expect("*")
        return coef, self.atom()

    def atom(self) -> PeriodicPotential:
        self.skip()
        start = self.pos
        if self.peek("step{"):
            self.expect("step{")
            bps, vals = [], []
            while True:
                pair_pos = self.pos
                b = self.number()
                self.expect(":")
                v = self.number()
                if bps and b <= bps[-1]:
                    raise DSLSemanticError("step breakpoints not increasing", self.text, pair_pos, "breakpoint > " + str(bps[-1]))
                bps.append(b)
                vals.append(v)
                if self.peek(","):
                    self.expect(",")
                    continue
                self.expect("}")
                break
            return self._build(lambda: Step(tuple(bps), tuple(vals)), start)
        if self.peek("cos("):
            self.expect("cos(")
            k = self.integer()
            self.expect(",")
            a = self.number()
            self.expect(",")
            phi = self.number()
            self.expect(")")
            return self._build(lambda: Smooth.cos(k, a, phi), start)
        if self.peek("sing("):
            self.expect("sing(")
            g = self.number()
            self.expect(",")
            c = self.number()
            self.expect(")")
            return self._build(lambda: PowerSingular(g, c), start)
        if self.peek("zero"):
            self.expect("zero")
            return ZERO
        found = self.text[self.pos:self.pos + 8] or "end of input"
        raise self.error(f"unexpected {found!r}", expected="'step{', 'cos(', 'sing(' or 'zero'")

    def _build(self, make, start):
        try:
            return make()
        except DomainError as exc:
            raise DSLSemanticError(str(exc), self.text, start) from None


def parse_potential(text: str) -> PeriodicPotential:
    """Parse a DSL string into a :class:`PeriodicPotential`.

    >>> parse_potential("step{0:1, 1/2:0}").to_dsl()
    'step{0:1, 1/2:0}'
    """
    return _Parser(text).potential()


def canonical(text: str) -> str:
    return parse_potential(text).to_dsl()
