"""Parser for the textual system format and for rational literals.

The format is line-oriented only by convention; the grammar is free-form:

    system  := "functor" ":" fexpr "states" ":" id ("," id)*
               ("param" id "=" ratexpr)*
               ("alpha" id "=" fval)+
    fexpr   := fprod ("+" fprod)*          # coproduct, right associative
    fprod   := fatom ("x" fatom)*          # product, right associative
    fatom   := "Id" | "One" | "Real" "(" "top" "=" ratexpr ")"
             | "Labels" "{" id ("," id)* "}"
             | "Pow" "(" fexpr ")" | "Dist" "(" fexpr ")" | "(" fexpr ")"
    fval    := "dist" "{" fval ":" ratexpr ("," fval ":" ratexpr)* "}"
             | "{" (fval ("," fval)*)? "}"
             | "(" fval "," fval ")"
             | "inl" fval | "inr" fval
             | "unit" | "real" ratexpr | "label" id | id
    ratexpr := ratom (("+"|"-") ratom)*
    ratexpr accepts integers, fractions "p/q" and parameter names.

`param` declarations bind rational parameters usable inside ratexpr;
callers may override them (this is how a family like the epsilon-indexed
example systems is instantiated from one file).  "#" starts a comment
that runs to the end of the line.  Rational literals reject decimal
notation: values are exact or they are errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .functors import (
    ConstLabels,
    ConstOne,
    ConstReal,
    Coproduct,
    Dist,
    DistOf,
    FunctorExpr,
    FValue,
    Identity,
    Inl,
    Inr,
    Label,
    Pair,
    Pow,
    Product,
    Real,
    SetOf,
    StateRef,
    Unit,
    expr_tops,
)
from .model import System, validate_system

ONE = Fraction(1)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int, expected: list[str] | None = None):
        self.line = line
        self.col = col
        self.expected = expected or []
        hint = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"line {line}, column {col}: {message}{hint}")


@dataclass(frozen=True)
class Token:
    kind: str  # "id" | "int" | "punct" | "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t\r\n]+)
      | (?P<comment>\#[^\n]*)
      | (?P<int>\d+)
      | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<punct>[:,=(){}/+-])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind == "int":
            tokens.append(Token("int", lexeme, line, col))
        elif kind == "id":
            tokens.append(Token("id", lexeme, line, col))
        elif kind == "punct":
            tokens.append(Token("punct", lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


_VALUE_KEYWORDS = {"dist", "inl", "inr", "unit", "real", "label"}


class _Parser:
    def __init__(self, text: str, params: Mapping[str, Fraction] | None = None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.params: dict[str, Fraction] = dict(params or {})
        self.overrides = dict(params or {})

    # -- token plumbing ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def fail(self, message: str, expected: list[str] | None = None):
        t = self.peek()
        raise ParseError(message, t.line, t.col, expected)

    def expect_punct(self, p: str) -> Token:
        t = self.peek()
        if t.kind != "punct" or t.text != p:
            self.fail(f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input", [repr(p)])
        return self.next()

    def expect_word(self, w: str) -> Token:
        t = self.peek()
        if t.kind != "id" or t.text != w:
            self.fail(f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input", [repr(w)])
        return self.next()

    def accept_word(self, w: str) -> bool:
        t = self.peek()
        if t.kind == "id" and t.text == w:
            self.next()
            return True
        return False

    def ident(self, what: str = "identifier") -> str:
        t = self.peek()
        if t.kind in ("id", "int"):
            return self.next().text
        self.fail(f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input", [what])

    # -- rationals -----------------------------------------------------------

    def rat_atom(self) -> Fraction:
        t = self.peek()
        if t.kind == "int":
            self.next()
            num = int(t.text)
            if self.peek().kind == "punct" and self.peek().text == "/":
                self.next()
                d = self.peek()
                if d.kind != "int":
                    self.fail("denominator must be an integer", ["integer"])
                self.next()
                den = int(d.text)
                if den == 0:
                    raise ParseError("division by zero", d.line, d.col)
                return Fraction(num, den)
            return Fraction(num)
        if t.kind == "id":
            if t.text in self.params:
                self.next()
                return self.params[t.text]
            self.fail(f"unknown parameter '{t.text}'", ["rational", "parameter name"])
        self.fail(
            f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input",
            ["rational"],
        )

    def ratexpr(self) -> Fraction:
        value = self.rat_atom()
        while self.peek().kind == "punct" and self.peek().text in "+-":
            op = self.next().text
            rhs = self.rat_atom()
            value = value + rhs if op == "+" else value - rhs
        return value

    # -- functor expressions ---------------------------------------------------

    def fexpr(self) -> FunctorExpr:
        left = self.fprod()
        if self.peek().kind == "punct" and self.peek().text == "+":
            self.next()
            return Coproduct(left, self.fexpr())
        return left

    def fprod(self) -> FunctorExpr:
        left = self.fatom()
        t = self.peek()
        if t.kind == "id" and t.text == "x":
            self.next()
            return Product(left, self.fprod())
        return left

    def fatom(self) -> FunctorExpr:
        t = self.peek()
        if t.kind == "punct" and t.text == "(":
            self.next()
            inner = self.fexpr()
            self.expect_punct(")")
            return inner
        if t.kind != "id":
            self.fail(
                f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input",
                ["Id", "One", "Real", "Labels", "Pow", "Dist", "("],
            )
        word = t.text
        if word == "Id":
            self.next()
            return Identity()
        if word == "One":
            self.next()
            return ConstOne()
        if word == "Real":
            self.next()
            self.expect_punct("(")
            self.expect_word("top")
            self.expect_punct("=")
            top = self.ratexpr()
            self.expect_punct(")")
            return ConstReal(top)
        if word == "Labels":
            self.next()
            self.expect_punct("{")
            labels = [self.ident("label")]
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                labels.append(self.ident("label"))
            self.expect_punct("}")
            return ConstLabels(tuple(labels))
        if word == "Pow":
            self.next()
            self.expect_punct("(")
            inner = self.fexpr()
            self.expect_punct(")")
            return Pow(inner)
        if word == "Dist":
            self.next()
            self.expect_punct("(")
            inner = self.fexpr()
            self.expect_punct(")")
            return Dist(inner)
        self.fail(f"found {word!r}", ["Id", "One", "Real", "Labels", "Pow", "Dist", "("])

    # -- behaviour values ------------------------------------------------------

    def fval(self) -> FValue:
        t = self.peek()
        if t.kind == "punct" and t.text == "(":
            self.next()
            left = self.fval()
            self.expect_punct(",")
            right = self.fval()
            self.expect_punct(")")
            return Pair(left, right)
        if t.kind == "punct" and t.text == "{":
            self.next()
            elems: list[FValue] = []
            while not (self.peek().kind == "punct" and self.peek().text == "}"):
                if elems:
                    if self.peek().kind == "punct" and self.peek().text == ",":
                        self.next()
                elems.append(self.fval())
            self.expect_punct("}")
            return SetOf(tuple(elems))
        if t.kind == "id" and t.text in _VALUE_KEYWORDS:
            word = self.next().text
            if word == "unit":
                return Unit()
            if word == "inl":
                return Inl(self.fval())
            if word == "inr":
                return Inr(self.fval())
            if word == "real":
                return Real(self.ratexpr())
            if word == "label":
                return Label(self.ident("label"))
            if word == "dist":
                open_tok = self.expect_punct("{")
                weights: list[tuple[FValue, Fraction]] = []
                while True:
                    v = self.fval()
                    self.expect_punct(":")
                    w = self.ratexpr()
                    weights.append((v, w))
                    if self.peek().kind == "punct" and self.peek().text == ",":
                        self.next()
                        continue
                    break
                self.expect_punct("}")
                try:
                    return DistOf(tuple(weights))
                except ValueError as exc:
                    raise ParseError(str(exc), open_tok.line, open_tok.col) from exc
        if t.kind in ("id", "int"):
            return StateRef(self.ident("state"))
        self.fail(
            f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input",
            ["state", "dist{", "{", "(", "inl", "inr", "unit", "real", "label"],
        )

    # -- whole systems -----------------------------------------------------------

    def system(self, name: str = "") -> System:
        self.expect_word("functor")
        self.expect_punct(":")
        expr = self.fexpr()
        self.expect_word("states")
        self.expect_punct(":")
        states = [self.ident("state")]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            states.append(self.ident("state"))
        declared_top: Fraction | None = None
        if self.accept_word("top"):
            self.expect_punct(":")
            declared_top = self.ratexpr()
        declared_params: set[str] = set()
        while self.accept_word("param"):
            pname = self.ident("parameter name")
            declared_params.add(pname)
            self.expect_punct("=")
            tok = self.peek()
            value = self.ratexpr()
            if pname in self.overrides:
                value = self.overrides[pname]
            if value < 0:
                raise ParseError(f"parameter '{pname}' is negative ({value})", tok.line, tok.col)
            self.params[pname] = value
        undeclared = sorted(set(self.overrides) - declared_params)
        if undeclared:
            names = ", ".join(f"'{p}'" for p in undeclared)
            have = ", ".join(sorted(declared_params)) if declared_params else "none"
            raise ParseError(
                f"override for undeclared parameter {names}; declared: {have}", 1, 1
            )
        alpha: dict[str, FValue] = {}
        saw_alpha = False
        while self.accept_word("alpha"):
            saw_alpha = True
            tok = self.peek()
            x = self.ident("state")
            if x in alpha:
                raise ParseError(f"duplicate behaviour for state '{x}'", tok.line, tok.col)
            self.expect_punct("=")
            alpha[x] = self.fval()
        if not saw_alpha:
            self.fail("system has no behaviour clauses", ["alpha"])
        if self.peek().kind != "eof":
            self.fail(f"trailing input {self.peek().text!r}", ["end of input"])

        tops = expr_tops(expr)
        if len(tops) > 1:
            raise ParseError(
                f"real-constant bounds disagree: {sorted(map(str, tops))}", 1, 1
            )
        top = next(iter(tops)) if tops else (declared_top if declared_top is not None else ONE)
        if declared_top is not None and tops and declared_top != top:
            raise ParseError(
                f"declared bound {declared_top} differs from the real-constant bound {top}",
                1,
                1,
            )
        sys_ = System(expr=expr, states=tuple(states), alpha=alpha, top=top, name=name)
        report = validate_system(sys_)
        if not report.ok:
            first = report.errors()[0]
            raise ParseError(f"{first.where}: {first.message}", 1, 1)
        return sys_


def parse_system(
    text: str, *, params: Mapping[str, Fraction] | None = None, name: str = ""
) -> System:
    """Parse a system description; `params` overrides declared parameters."""
    return _Parser(text, params).system(name)


def parse_fexpr(text: str) -> FunctorExpr:
    p = _Parser(text)
    expr = p.fexpr()
    if p.peek().kind != "eof":
        p.fail(f"trailing input {p.peek().text!r}", ["end of input"])
    return expr


def parse_fvalue(text: str) -> FValue:
    p = _Parser(text)
    v = p.fval()
    if p.peek().kind != "eof":
        p.fail(f"trailing input {p.peek().text!r}", ["end of input"])
    return v


_RAT_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse 'p' or 'p/q'.  Decimal notation is rejected on purpose: every
    interface of this package is exact."""
    m = _RAT_RE.match(text)
    if not m:
        raise ValueError(
            f"not an exact rational: {text!r} (use integers or p/q, not decimals)"
        )
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ValueError("division by zero")
    return Fraction(num, den)
