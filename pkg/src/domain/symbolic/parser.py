"""
Recursive-descent parser for field coefficients.

    expr    := term (("+"|"-") term)* ;
    term    := factor ("*" factor)* ;
    factor  := base ("^" uint)? ;
    base    := rational | var | "sin(" affine ")" | "cos(" affine ")" | "(" expr ")" | "-" factor ;
    var     := "x" uint ;
    affine  := rational? var (("+"|"-") rational? var)* (("+"|"-") phase)? ;
    phase   := rational? "pi" ("/" uint)? ;
    rational:= int ("/" uint)? .

A "*" between the rational and the variable of an affine item is accepted.
Phases must be multiples of pi/2 so that exp(i*phase) stays exact; a bare
rational phase such as sin(x1 + 1) has no exact representation and is
rejected.
"""

import re
from dataclasses import dataclass
from fractions import Fraction

from src.base.core.exceptions import ExprParseError
from src.domain.symbolic.expr import Expr, GaussianRational

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<decimal>\d+\.\d*|\.\d+)
  | (?P<int>\d+)
  | (?P<var>x\d+)
  | (?P<func>sin|cos)
  | (?P<pi>pi)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_QUARTER_TURNS = {
    0: GaussianRational(Fraction(1)),
    1: GaussianRational(Fraction(0), Fraction(1)),
    2: GaussianRational(Fraction(-1)),
    3: GaussianRational(Fraction(0), Fraction(-1)),
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExprParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = match.lastgroup
        if kind == "decimal":
            raise ExprParseError(
                "decimal literals are not exact, write a rational p/q", pos, text
            )
        if kind != "ws":
            tokens.append(Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, num_vars: int):
        self.text = text
        self.num_vars = num_vars
        self.tokens = tokenize(text)
        self.index = 0

    # --- token helpers ---

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def at(self, kind: str, text: str | None = None) -> bool:
        token = self.current
        return token.kind == kind and (text is None or token.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            wanted = text or kind
            raise self.error(f"expected {wanted!r}, found {self.current.text or 'end of input'!r}")
        return self.advance()

    def error(self, message: str, token: Token | None = None) -> ExprParseError:
        token = token or self.current
        return ExprParseError(message, token.pos, self.text)

    # --- grammar ---

    def parse(self) -> Expr:
        expr = self.expr()
        if not self.at("end"):
            raise self.error(f"unexpected {self.current.text!r}")
        return expr

    def expr(self) -> Expr:
        result = self.term()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.advance().text
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Expr:
        result = self.factor()
        while self.at("op", "*"):
            self.advance()
            result = result * self.factor()
        return result

    def factor(self) -> Expr:
        base = self.base()
        if self.at("op", "^"):
            self.advance()
            exponent = self.exponent()
            base = base**exponent
        return base

    def exponent(self) -> int:
        token = self.current
        if self.at("op", "-"):
            raise self.error("negative exponents are not allowed")
        if not self.at("int"):
            raise self.error("exponent must be a nonnegative integer")
        self.advance()
        if self.at("op", "/"):
            raise self.error("exponent must be an integer, not a fraction", token)
        return int(token.text)

    def rational(self) -> Fraction:
        numerator = int(self.expect("int").text)
        if self.at("op", "/"):
            self.advance()
            token = self.expect("int")
            denominator = int(token.text)
            if denominator == 0:
                raise self.error("zero denominator", token)
            return Fraction(numerator, denominator)
        return Fraction(numerator)

    def variable_index(self, token: Token) -> int:
        index = int(token.text[1:])
        if not 1 <= index <= self.num_vars:
            raise self.error(
                f"variable {token.text} out of range (1..{self.num_vars})", token
            )
        return index

    def base(self) -> Expr:
        token = self.current
        if token.kind == "int":
            return Expr.constant(self.num_vars, self.rational())
        if token.kind == "var":
            self.advance()
            return Expr.variable(self.num_vars, self.variable_index(token))
        if token.kind == "func":
            self.advance()
            self.expect("op", "(")
            freq, phase = self.affine()
            self.expect("op", ")")
            if token.text == "sin":
                return Expr.sin_affine(self.num_vars, freq, phase)
            return Expr.cos_affine(self.num_vars, freq, phase)
        if token.kind == "op" and token.text == "(":
            self.advance()
            inner = self.expr()
            self.expect("op", ")")
            return inner
        if token.kind == "op" and token.text == "-":
            self.advance()
            return -self.factor()
        if token.kind == "pi":
            raise self.error("pi is only allowed as a phase inside sin/cos")
        raise self.error(f"unexpected {token.text or 'end of input'!r}")

    def affine(self) -> tuple[list[Fraction], GaussianRational]:
        freq = [Fraction(0)] * self.num_vars
        constant = Fraction(0)
        pi_multiple = Fraction(0)
        sign = 1
        first = True
        while True:
            if self.at("op", "+") or self.at("op", "-"):
                sign = 1 if self.advance().text == "+" else -1
            elif not first:
                break
            first = False

            start = self.current
            coefficient: Fraction | None = None
            if self.at("int"):
                coefficient = self.rational()
                if self.at("op", "*"):
                    self.advance()
                    if not (self.at("var") or self.at("pi")):
                        raise self.error("non-affine argument inside sin/cos")
            if self.at("var"):
                token = self.advance()
                freq[self.variable_index(token) - 1] += sign * (coefficient or 1)
            elif self.at("pi"):
                self.advance()
                q = sign * (coefficient if coefficient is not None else Fraction(1))
                if self.at("op", "/"):
                    self.advance()
                    token = self.expect("int")
                    if int(token.text) == 0:
                        raise self.error("zero denominator", token)
                    q /= int(token.text)
                pi_multiple += q
            elif coefficient is not None:
                constant += sign * coefficient
            else:
                raise self.error("non-affine argument inside sin/cos", start)

            if self.at("op", "^") or self.at("op", "*") or self.at("op", "("):
                raise self.error("non-affine argument inside sin/cos")
            if not (self.at("op", "+") or self.at("op", "-")):
                break

        if constant != 0:
            raise self.error(
                f"unsupported phase {constant}: sin/cos phases are restricted to multiples of pi/2 "
                "so coefficients stay exact; write them with pi, e.g. sin(x1 + pi/2)"
            )
        half_turns = pi_multiple * 2
        if half_turns.denominator != 1:
            raise self.error(
                f"unsupported phase {pi_multiple}*pi: sin/cos phases are restricted to multiples of pi/2"
            )
        return freq, _QUARTER_TURNS[int(half_turns) % 4]


def parse(text: str, num_vars: int) -> Expr:
    """Parse `text` into a canonical Expr in `num_vars` variables."""
    return _Parser(text, num_vars).parse()
