"""
Vector fields with trigonometric-polynomial coefficients, their brackets,
divergence and flows, and the FieldSystem that bundles a generating family
with its domain. The measure is fixed: Lebesgue on boxes, the product Haar
measure on tori, so skew-adjointness of a field is exactly div X = 0.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from src.base.core.exceptions import (
    DimensionMismatchError,
    FlowEscapeError,
    SystemDefinitionError,
)
from src.domain.symbolic.expr import Expr
from src.domain.symbolic.linear import SparseRow
from src.domain.symbolic.parser import parse

logger = logging.getLogger(__name__)

_DERIVATION_RE = re.compile(r"\bd(\d+)\b")


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise SystemDefinitionError("box bounds have different lengths")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise SystemDefinitionError(f"empty box {self.lo}..{self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def periodic(self) -> tuple[bool, ...]:
        return (False,) * self.dim

    @property
    def measure(self) -> str:
        return "lebesgue"

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo, hi = self.bounds()
        return lo + (hi - lo) * rng.random((n, self.dim))

    def wrap(self, points: np.ndarray) -> np.ndarray:
        return points

    def describe(self) -> str:
        return "box [" + "; ".join(f"{l}..{h}" for l, h in zip(self.lo, self.hi)) + "]"


@dataclass(frozen=True)
class Torus:
    """Flat torus [0, q_j * pi) per axis; periods are stored as the rationals q_j."""

    periods_over_pi: tuple[Fraction, ...]

    def __post_init__(self):
        if any(q <= 0 for q in self.periods_over_pi):
            raise SystemDefinitionError("torus periods must be positive")

    @property
    def dim(self) -> int:
        return len(self.periods_over_pi)

    @property
    def periodic(self) -> tuple[bool, ...]:
        return (True,) * self.dim

    @property
    def measure(self) -> str:
        return "haar-product"

    @property
    def periods(self) -> np.ndarray:
        return np.array([float(q) * math.pi for q in self.periods_over_pi])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(self.dim), self.periods

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.periods * rng.random((n, self.dim))

    def wrap(self, points: np.ndarray) -> np.ndarray:
        return np.mod(points, self.periods)

    def describe(self) -> str:
        return "torus [" + ", ".join(f"{q}pi" for q in self.periods_over_pi) + "]"


Domain = Box | Torus


@dataclass(frozen=True)
class VectorField:
    components: tuple[Expr, ...]
    label: str | None = None

    def __post_init__(self):
        k = len(self.components)
        if k == 0:
            raise DimensionMismatchError("a vector field needs at least one component")
        if any(c.num_vars != k for c in self.components):
            raise DimensionMismatchError(
                f"all components of a field on a {k}-manifold must use {k} variables"
            )

    @classmethod
    def coordinate(cls, dim: int, axis: int, label: str | None = None) -> VectorField:
        """The constant field d/dx_axis (1-based)."""
        comps = tuple(
            Expr.constant(dim, 1 if j == axis else 0) for j in range(1, dim + 1)
        )
        return cls(comps, label or f"d{axis}")

    @classmethod
    def shear(cls, coefficient: Expr, axis: int, label: str | None = None) -> VectorField:
        """coefficient * d/dx_axis."""
        dim = coefficient.num_vars
        comps = tuple(
            coefficient if j == axis else Expr.zero(dim) for j in range(1, dim + 1)
        )
        return cls(comps, label)

    @property
    def dim(self) -> int:
        return len(self.components)

    def apply(self, f: Expr) -> Expr:
        """X f = sum_i X^i d_i f."""
        result = Expr.zero(self.dim)
        for i, coef in enumerate(self.components, start=1):
            if not coef.is_zero():
                result = result + coef * f.partial(i)
        return result

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __add__(self, other: VectorField) -> VectorField:
        _same_dim(self, other)
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> VectorField:
        return VectorField(tuple(-c for c in self.components), self.label)

    def __sub__(self, other: VectorField) -> VectorField:
        return self + (-other)

    def scale(self, c: Fraction | int) -> VectorField:
        return VectorField(tuple(comp.scale(c) for comp in self.components))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)

    def shear_axis(self) -> int | None:
        """Axis j (1-based) when the field is a(x) d_j with a independent of x_j."""
        nonzero = [j for j, c in enumerate(self.components, start=1) if not c.is_zero()]
        if len(nonzero) != 1:
            return None
        j = nonzero[0]
        return None if self.components[j - 1].depends_on(j) else j

    def coordinates(self) -> SparseRow:
        """Exact real coordinates indexed by (component, TermKey, part)."""
        row = SparseRow()
        for j, comp in enumerate(self.components):
            for key, coef in comp.items():
                if coef.re:
                    row[(j, key, 0)] = coef.re
                if coef.im:
                    row[(j, key, 1)] = coef.im
        return row

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Field vectors at points of shape (..., k); returns shape (..., k)."""
        pts = np.asarray(points, dtype=float)
        return np.stack([c.evaluate(pts) for c in self.components], axis=-1)

    def to_text(self) -> str:
        parts = []
        for j, comp in enumerate(self.components, start=1):
            if comp.is_zero():
                continue
            if comp == Expr.constant(self.dim, 1):
                parts.append(f"d{j}")
            elif len(comp) == 1 and not comp.to_text().startswith("-"):
                parts.append(f"{comp.to_text()} d{j}")
            else:
                parts.append(f"({comp.to_text()}) d{j}")
        return " + ".join(parts) if parts else "0"

    def __str__(self) -> str:
        return self.to_text()


def _same_dim(x: VectorField, y: VectorField) -> None:
    if x.dim != y.dim:
        raise DimensionMismatchError(f"fields on {x.dim}- and {y.dim}-manifolds")


def parse_field(text: str, dim: int, label: str | None = None) -> VectorField:
    """Parse "<expr> d<j> + <expr> d<j> ..." into a field."""
    matches = list(_DERIVATION_RE.finditer(text))
    if not matches:
        raise SystemDefinitionError(f"field {text!r} has no d<j> term")
    components = [Expr.zero(dim) for _ in range(dim)]
    start = 0
    for match in matches:
        axis = int(match.group(1))
        if not 1 <= axis <= dim:
            raise SystemDefinitionError(f"d{axis} out of range in {text!r}")
        coefficient_text = text[start : match.start()].strip()
        if coefficient_text.startswith("+"):
            coefficient_text = coefficient_text[1:].strip()
        if coefficient_text in ("", "-"):
            coefficient_text += "1"
        coefficient_text = coefficient_text.rstrip("*").strip()
        components[axis - 1] = components[axis - 1] + parse(coefficient_text, dim)
        start = match.end()
    if text[start:].strip():
        raise SystemDefinitionError(f"trailing text after last d<j> in {text!r}")
    return VectorField(tuple(components), label)


def bracket(x: VectorField, y: VectorField) -> VectorField:
    """[X, Y]^j = X(Y^j) - Y(X^j)."""
    _same_dim(x, y)
    return VectorField(
        tuple(x.apply(yj) - y.apply(xj) for xj, yj in zip(x.components, y.components))
    )


def divergence(x: VectorField) -> Expr:
    result = Expr.zero(x.dim)
    for i, comp in enumerate(x.components, start=1):
        result = result + comp.partial(i)
    return result


def self_derivative(x: VectorField) -> VectorField:
    """(nabla_X X)^k = X(X^k), the Ito drift contributed by X."""
    return VectorField(tuple(x.apply(comp) for comp in x.components))


def flow(x: VectorField, x0: Sequence[float], t: float, steps: int = 64) -> np.ndarray:
    """
    exp(tX) x0. Shear fields a(x_{!=j}) d_j are integrated exactly; everything
    else uses `steps` classical fourth-order Runge-Kutta steps.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    state = np.asarray(x0, dtype=float).copy()
    if state.shape != (x.dim,):
        raise DimensionMismatchError(f"start point of length {state.size} for a {x.dim}-field")

    axis = x.shear_axis()
    if axis is not None:
        state[axis - 1] += t * x.components[axis - 1].evaluate(state)
        if not np.all(np.isfinite(state)):
            raise FlowEscapeError(f"flow of {x} left the representable range")
        return state

    dt = t / steps
    for _ in range(steps):
        k1 = x.evaluate(state)
        k2 = x.evaluate(state + 0.5 * dt * k1)
        k3 = x.evaluate(state + 0.5 * dt * k2)
        k4 = x.evaluate(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise FlowEscapeError(f"flow of {x} left the representable range")
    return state


@dataclass(frozen=True)
class FieldSystem:
    dim: int
    fields: tuple[VectorField, ...]
    domain: Domain
    name: str = "custom"
    certificate_points: tuple[tuple[Fraction | float, ...], ...] = field(default=())

    def __post_init__(self):
        if self.domain.dim != self.dim:
            raise SystemDefinitionError(
                f"domain of dimension {self.domain.dim} for a {self.dim}-dimensional system"
            )
        if not self.fields:
            raise SystemDefinitionError("a system needs at least one field")
        for i, x in enumerate(self.fields, start=1):
            if x.dim != self.dim:
                raise DimensionMismatchError(f"field {i} lives on a {x.dim}-manifold")
            div = divergence(x)
            if not div.is_zero():
                raise SystemDefinitionError(
                    f"field {i} ({x}) is not skew-adjoint: divergence {div}"
                )
            if isinstance(self.domain, Torus):
                self._check_periodic(i, x)
        for p in self.certificate_points:
            if len(p) != self.dim:
                raise SystemDefinitionError(f"certificate point {p} has wrong length")

    def _check_periodic(self, index: int, x: VectorField) -> None:
        for comp in x.components:
            for key, _ in comp.items():
                for j, q in enumerate(self.domain.periods_over_pi):
                    if key.alpha[j] != 0:
                        raise SystemDefinitionError(
                            f"field {index} has a polynomial factor in periodic x{j + 1}"
                        )
                    # a_j * q_j * pi must be a multiple of 2 pi
                    if (key.freq[j] * q / 2).denominator != 1:
                        raise SystemDefinitionError(
                            f"field {index} frequency {key.freq[j]} in x{j + 1} "
                            f"is not commensurate with period {q}pi"
                        )

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    @property
    def measure(self) -> str:
        return self.domain.measure

    def field_matrix(self, points: np.ndarray) -> np.ndarray:
        """A(x) with the field values as columns; shape (..., k, n)."""
        pts = np.asarray(points, dtype=float)
        return np.stack([x.evaluate(pts) for x in self.fields], axis=-1)

    def ito_drift(self) -> VectorField:
        """sum_i nabla_{X_i} X_i."""
        total = VectorField(tuple(Expr.zero(self.dim) for _ in range(self.dim)))
        for x in self.fields:
            total = total + self_derivative(x)
        return total

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "domain": self.domain.describe(),
            "measure": self.measure,
            "fields": [x.to_text() for x in self.fields],
        }
