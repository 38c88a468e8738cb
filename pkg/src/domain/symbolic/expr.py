"""
Exact trigonometric-polynomial ring.

An Expr is a finite sum  sum c * x^alpha * exp(i <a, x>)  with exact complex
rational coefficients c and rational frequency vectors a. sin and cos only
exist at the text level; internally everything is an exponential, which
makes the ring closed under +, * and d/dx_i with a unique normal form.
Every Expr represents a real function, so the coefficient at (alpha, -a) is
always the conjugate of the coefficient at (alpha, a).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from src.base.core.exceptions import DimensionMismatchError

Rational = Fraction | int


@dataclass(frozen=True, slots=True)
class GaussianRational:
    """Exact element of Q(i)."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __add__(self, other: GaussianRational) -> GaussianRational:
        return GaussianRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other: GaussianRational) -> GaussianRational:
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self) -> GaussianRational:
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other: GaussianRational) -> GaussianRational:
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def scale(self, c: Rational) -> GaussianRational:
        return GaussianRational(self.re * c, self.im * c)

    def conjugate(self) -> GaussianRational:
        return GaussianRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0


ONE = GaussianRational(Fraction(1))
I_UNIT = GaussianRational(Fraction(0), Fraction(1))


class TermKey(NamedTuple):
    """Monomial x^alpha * exp(i <freq, x>); ordered lexicographically on (alpha, freq)."""

    alpha: tuple[int, ...]
    freq: tuple[Fraction, ...]

    def is_positive_frequency(self) -> bool:
        """True when the first nonzero frequency entry is positive."""
        for a in self.freq:
            if a != 0:
                return a > 0
        return False

    def is_zero_frequency(self) -> bool:
        return all(a == 0 for a in self.freq)

    def conjugate(self) -> TermKey:
        return TermKey(self.alpha, tuple(-a for a in self.freq))


def _accumulate(
    target: dict[TermKey, GaussianRational], key: TermKey, coef: GaussianRational
) -> None:
    current = target.get(key)
    total = coef if current is None else current + coef
    if total.is_zero():
        target.pop(key, None)
    else:
        target[key] = total


class Expr:
    """Immutable canonical trigonometric polynomial in `num_vars` variables."""

    def __init__(
        self, num_vars: int, terms: Mapping[TermKey, GaussianRational] | None = None
    ):
        self.num_vars = num_vars
        items: list[tuple[TermKey, GaussianRational]] = []
        for key, coef in (terms or {}).items():
            if len(key.alpha) != num_vars or len(key.freq) != num_vars:
                raise DimensionMismatchError(
                    f"term {key} does not match {num_vars} variables"
                )
            if any(e < 0 for e in key.alpha):
                raise ValueError(f"negative exponent in {key}")
            if not coef.is_zero():
                items.append((key, coef))
        items.sort(key=lambda item: item[0])
        self._items: tuple[tuple[TermKey, GaussianRational], ...] = tuple(items)
        if __debug__:
            self._check_real()

    def _check_real(self) -> None:
        """The coefficient at (alpha, -a) is the conjugate of the one at (alpha, a)."""
        terms = dict(self._items)
        for key, coef in self._items:
            if terms.get(key.conjugate()) != coef.conjugate():
                raise ValueError(f"term {key} breaks conjugate symmetry; expressions must be real")

    # --- constructors -------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int) -> Expr:
        return cls(num_vars)

    @classmethod
    def constant(cls, num_vars: int, value: Rational) -> Expr:
        key = TermKey((0,) * num_vars, (Fraction(0),) * num_vars)
        return cls(num_vars, {key: GaussianRational(Fraction(value))})

    @classmethod
    def variable(cls, num_vars: int, index: int) -> Expr:
        """The coordinate x_index (1-based)."""
        if not 1 <= index <= num_vars:
            raise DimensionMismatchError(f"x{index} out of range for {num_vars} variables")
        alpha = tuple(1 if j == index - 1 else 0 for j in range(num_vars))
        return cls(num_vars, {TermKey(alpha, (Fraction(0),) * num_vars): ONE})

    @classmethod
    def exponential(
        cls, num_vars: int, freq: Sequence[Rational], coef: GaussianRational = ONE
    ) -> Expr:
        """coef * exp(i <freq, x>) + conj(coef) * exp(-i <freq, x>), a real function."""
        freq_t = tuple(Fraction(a) for a in freq)
        zero_alpha = (0,) * num_vars
        terms: dict[TermKey, GaussianRational] = {}
        _accumulate(terms, TermKey(zero_alpha, freq_t), coef)
        _accumulate(terms, TermKey(zero_alpha, tuple(-a for a in freq_t)), coef.conjugate())
        return cls(num_vars, terms)

    @classmethod
    def cos_affine(
        cls, num_vars: int, freq: Sequence[Rational], phase: GaussianRational = ONE
    ) -> Expr:
        """cos(<freq, x> + phi) where phase = exp(i phi) is exact in Q(i)."""
        return cls.exponential(num_vars, freq, phase.scale(Fraction(1, 2)))

    @classmethod
    def sin_affine(
        cls, num_vars: int, freq: Sequence[Rational], phase: GaussianRational = ONE
    ) -> Expr:
        """sin(<freq, x> + phi) = (e^{i(.)} - e^{-i(.)}) / 2i."""
        minus_half_i = GaussianRational(Fraction(0), Fraction(-1, 2))
        return cls.exponential(num_vars, freq, phase * minus_half_i)

    # --- structure ----------------------------------------------------

    @property
    def terms(self) -> dict[TermKey, GaussianRational]:
        return dict(self._items)

    def items(self) -> tuple[tuple[TermKey, GaussianRational], ...]:
        return self._items

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Expr):
            return NotImplemented
        return self.num_vars == other.num_vars and self._items == other._items

    def __hash__(self) -> int:
        return hash((self.num_vars, self._items))

    def is_zero(self) -> bool:
        return not self._items

    def is_constant(self) -> bool:
        return all(
            not any(key.alpha) and key.is_zero_frequency() for key, _ in self._items
        )

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("expression is not constant")
        return sum((coef.re for _, coef in self._items), Fraction(0))

    def is_polynomial(self) -> bool:
        return all(key.is_zero_frequency() for key, _ in self._items)

    def depends_on(self, index: int) -> bool:
        """Whether x_index (1-based) occurs in any term."""
        j = index - 1
        return any(key.alpha[j] != 0 or key.freq[j] != 0 for key, _ in self._items)

    def degree(self) -> int:
        return max((sum(key.alpha) for key, _ in self._items), default=0)

    # --- ring operations ----------------------------------------------

    def _check(self, other: Expr) -> None:
        if other.num_vars != self.num_vars:
            raise DimensionMismatchError(
                f"cannot combine expressions in {self.num_vars} and {other.num_vars} variables"
            )

    def _coerce(self, other: Expr | Rational) -> Expr:
        if isinstance(other, Expr):
            self._check(other)
            return other
        return Expr.constant(self.num_vars, other)

    def __add__(self, other: Expr | Rational) -> Expr:
        other = self._coerce(other)
        terms = self.terms
        for key, coef in other._items:
            _accumulate(terms, key, coef)
        return Expr(self.num_vars, terms)

    __radd__ = __add__

    def __neg__(self) -> Expr:
        return Expr(self.num_vars, {key: -coef for key, coef in self._items})

    def __sub__(self, other: Expr | Rational) -> Expr:
        return self + (-self._coerce(other))

    def __rsub__(self, other: Rational) -> Expr:
        return self._coerce(other) - self

    def scale(self, c: Rational) -> Expr:
        c = Fraction(c)
        if c == 0:
            return Expr.zero(self.num_vars)
        return Expr(self.num_vars, {key: coef.scale(c) for key, coef in self._items})

    def __mul__(self, other: Expr | Rational) -> Expr:
        if not isinstance(other, Expr):
            return self.scale(other)
        self._check(other)
        terms: dict[TermKey, GaussianRational] = {}
        for k1, c1 in self._items:
            for k2, c2 in other._items:
                key = TermKey(
                    tuple(a + b for a, b in zip(k1.alpha, k2.alpha)),
                    tuple(a + b for a, b in zip(k1.freq, k2.freq)),
                )
                _accumulate(terms, key, c1 * c2)
        return Expr(self.num_vars, terms)

    def __rmul__(self, other: Rational) -> Expr:
        return self.scale(other)

    def __pow__(self, exponent: int) -> Expr:
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Expr.constant(self.num_vars, 1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def partial(self, index: int) -> Expr:
        """Exact derivative d/dx_index (1-based)."""
        if not 1 <= index <= self.num_vars:
            raise DimensionMismatchError(f"x{index} out of range for {self.num_vars} variables")
        j = index - 1
        terms: dict[TermKey, GaussianRational] = {}
        for key, coef in self._items:
            power = key.alpha[j]
            if power:
                alpha = key.alpha[:j] + (power - 1,) + key.alpha[j + 1 :]
                _accumulate(terms, TermKey(alpha, key.freq), coef.scale(power))
            a = key.freq[j]
            if a:
                _accumulate(terms, key, coef * GaussianRational(Fraction(0), a))
        return Expr(self.num_vars, terms)

    # --- evaluation ---------------------------------------------------

    @cached_property
    def _compiled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = len(self._items)
        alpha = np.zeros((n, self.num_vars), dtype=np.int64)
        freq = np.zeros((n, self.num_vars), dtype=np.float64)
        re = np.zeros(n, dtype=np.float64)
        im = np.zeros(n, dtype=np.float64)
        for t, (key, coef) in enumerate(self._items):
            alpha[t] = key.alpha
            freq[t] = [float(a) for a in key.freq]
            re[t] = float(coef.re)
            im[t] = float(coef.im)
        return alpha, freq, re, im

    def evaluate(self, points: np.ndarray | Sequence[float]) -> np.ndarray | float:
        """
        Double-precision evaluation at one point (shape (n,)) or many
        (shape (..., n)). Each term contributes re*cos(theta) - im*sin(theta)
        times its monomial; the imaginary parts cancel pairwise.
        """
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        if pts.shape[-1] != self.num_vars:
            raise DimensionMismatchError(
                f"point of length {pts.shape[-1]} for {self.num_vars} variables"
            )
        out = np.zeros(pts.shape[:-1], dtype=np.float64)
        alpha, freq, re, im = self._compiled
        for t in range(len(re)):
            value = np.ones(pts.shape[:-1], dtype=np.float64)
            theta = np.zeros(pts.shape[:-1], dtype=np.float64)
            for j in range(self.num_vars):
                if alpha[t, j]:
                    value = value * pts[..., j] ** alpha[t, j]
                if freq[t, j]:
                    theta = theta + freq[t, j] * pts[..., j]
            if im[t]:
                value = value * (re[t] * np.cos(theta) - im[t] * np.sin(theta))
            else:
                value = value * (re[t] * np.cos(theta))
            out = out + value
        return float(out) if single else out

    def evaluate_imaginary(self, point: Sequence[float]) -> float:
        """Imaginary part of the term-wise sum; zero up to rounding for a real Expr."""
        pts = np.asarray(point, dtype=np.float64)
        alpha, freq, re, im = self._compiled
        mono = np.prod(pts[None, :] ** alpha, axis=1)
        theta = freq @ pts
        return float(np.sum(mono * (re * np.sin(theta) + im * np.cos(theta))))

    def evaluate_exact(self, point: Sequence[Rational]) -> Fraction | None:
        """
        Exact value at a rational point, or None when some oscillatory factor
        has a nonzero phase there (its value is then irrational).
        """
        if len(point) != self.num_vars:
            raise DimensionMismatchError(
                f"point of length {len(point)} for {self.num_vars} variables"
            )
        p = [Fraction(v) for v in point]
        total = Fraction(0)
        for key, coef in self._items:
            if sum((a * x for a, x in zip(key.freq, p)), Fraction(0)) != 0:
                return None
            mono = Fraction(1)
            for x, e in zip(p, key.alpha):
                if e:
                    mono *= x**e
            total += coef.re * mono
        return total

    # --- printing -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical real-form text; parse(to_text(e)) == e."""
        pieces: list[tuple[Fraction, str]] = []
        for key, coef in self._items:
            if key.is_zero_frequency():
                pieces.append((coef.re, _monomial_text(key.alpha)))
            elif key.is_positive_frequency():
                arg = _affine_text(key.freq)
                mono = _monomial_text(key.alpha)
                cos_coef = 2 * coef.re
                sin_coef = -2 * coef.im
                if cos_coef:
                    pieces.append((cos_coef, _join_factors(mono, f"cos({arg})")))
                if sin_coef:
                    pieces.append((sin_coef, _join_factors(mono, f"sin({arg})")))
        if not pieces:
            return "0"
        out: list[str] = []
        for idx, (c, factors) in enumerate(pieces):
            sign = "-" if c < 0 else "+"
            magnitude = abs(c)
            if factors and magnitude == 1:
                body = factors
            elif factors:
                body = f"{_rational_text(magnitude)}*{factors}"
            else:
                body = _rational_text(magnitude)
            if idx == 0:
                out.append(body if sign == "+" else f"-{body}")
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"Expr({self.num_vars}, {self.to_text()!r})"


def _rational_text(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _monomial_text(alpha: Iterable[int]) -> str:
    parts = []
    for j, e in enumerate(alpha, start=1):
        if e == 1:
            parts.append(f"x{j}")
        elif e > 1:
            parts.append(f"x{j}^{e}")
    return "*".join(parts)


def _affine_text(freq: Sequence[Fraction]) -> str:
    parts: list[str] = []
    for j, a in enumerate(freq, start=1):
        if a == 0:
            continue
        sign = "-" if a < 0 else "+"
        magnitude = abs(a)
        body = f"x{j}" if magnitude == 1 else f"{_rational_text(magnitude)}*x{j}"
        if not parts:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


def _join_factors(*factors: str) -> str:
    return "*".join(f for f in factors if f)


# Functional spellings of the ring operations


def add(a: Expr, b: Expr) -> Expr:
    return a + b


def mul(a: Expr, b: Expr) -> Expr:
    return a * b


def scale(a: Expr, c: Rational) -> Expr:
    return a.scale(c)


def partial(a: Expr, index: int) -> Expr:
    return a.partial(index)


def evaluate(a: Expr, point: Sequence[float]) -> float:
    return a.evaluate(point)
