"""
Built-in example systems. Each entry builds a FieldSystem together with
curated Hormander certificate points (typically on the degeneracy set).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from src.base.core.exceptions import SystemDefinitionError, UnknownBuiltinError
from src.domain.symbolic.expr import Expr
from src.domain.symbolic.fields import Box, FieldSystem, Torus, VectorField, parse_field
from src.domain.symbolic.parser import parse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BuiltinEntry:
    name: str
    description: str
    factory: Callable[..., FieldSystem]


_REGISTRY: dict[str, BuiltinEntry] = {}


def register(name: str, description: str):
    def decorator(factory: Callable[..., FieldSystem]) -> Callable[..., FieldSystem]:
        _REGISTRY[name] = BuiltinEntry(name, description, factory)
        return factory

    return decorator


def builtin(name: str, **params: Any) -> FieldSystem:
    """Build a registered example system."""
    entry = _REGISTRY.get(name)
    if entry is None:
        raise UnknownBuiltinError(
            f"unknown builtin {name!r}; available: {', '.join(sorted(_REGISTRY))}"
        )
    try:
        system = entry.factory(**params)
    except TypeError as e:
        raise SystemDefinitionError(f"invalid parameters for {name}: {e}") from e
    logger.debug(f"Built {name} with {params}: {system.n_fields} fields on a {system.dim}-manifold")
    return system


def available() -> list[BuiltinEntry]:
    return [_REGISTRY[name] for name in sorted(_REGISTRY)]


def _polynomial(text: str, num_vars: int, allowed: int) -> Expr:
    """Parse a polynomial that may only use x1..x_allowed."""
    expr = parse(text, num_vars)
    if not expr.is_polynomial():
        raise SystemDefinitionError(f"{text!r} is not a polynomial")
    for j in range(allowed + 1, num_vars + 1):
        if expr.depends_on(j):
            raise SystemDefinitionError(f"{text!r} may only depend on x1..x{allowed}")
    return expr


def _box(dim: int, half_width: float) -> Box:
    return Box((-half_width,) * dim, (half_width,) * dim)


@register("euclidean", "flat comparison system {d1, ..., dk}")
def euclidean(k: int = 2, periodic: bool = False, half_width: float = 4.0) -> FieldSystem:
    if k < 1:
        raise SystemDefinitionError("k must be >= 1")
    domain = Torus((Fraction(2),) * k) if periodic else _box(k, half_width)
    fields = tuple(VectorField.coordinate(k, j) for j in range(1, k + 1))
    origin = tuple(Fraction(0) for _ in range(k))
    return FieldSystem(k, fields, domain, name=f"euclidean({k})", certificate_points=(origin,))


@register("grushin", "{d1, x1^k d2} on R^2")
def grushin(k: int = 1, half_width: float = 2.0) -> FieldSystem:
    if not isinstance(k, int) or k < 1:
        raise SystemDefinitionError("grushin needs an integer k >= 1")
    return poly_omega(omega=f"x1^{k}", half_width=half_width, name=f"grushin({k})")


@register("poly_omega", "{d1, omega(x1) d2} for a polynomial omega")
def poly_omega(omega: str = "x1", half_width: float = 2.0, name: str | None = None) -> FieldSystem:
    w = _polynomial(omega, 2, 1)
    if w.is_zero():
        raise SystemDefinitionError("omega must be a nonzero polynomial")
    fields = (VectorField.coordinate(2, 1), VectorField.shear(w, 2))
    points = ((Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)))
    return FieldSystem(
        2, fields, _box(2, half_width), name=name or f"poly_omega({omega})", certificate_points=points
    )


@register("multi_omega", "{d1, omega_i(x1) d2} for a family of polynomials")
def multi_omega(omegas: tuple[str, ...] = ("1", "x1"), half_width: float = 2.0) -> FieldSystem:
    if not omegas:
        raise SystemDefinitionError("multi_omega needs at least one polynomial")
    fields = [VectorField.coordinate(2, 1)]
    for text in omegas:
        w = _polynomial(text, 2, 1)
        if w.is_zero():
            raise SystemDefinitionError("every omega_i must be nonzero")
        fields.append(VectorField.shear(w, 2))
    points = ((Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)))
    return FieldSystem(
        2,
        tuple(fields),
        _box(2, half_width),
        name=f"multi_omega({', '.join(omegas)})",
        certificate_points=points,
    )


@register("product_omega", "R^n x R^m with d/dx'_k and omega_{l,i}(x') d/dx''_l")
def product_omega(
    n: int = 2, m: int = 1, omegas: tuple[tuple[str, ...], ...] = (("x1^2 + x2^2 - 1",),),
    half_width: float = 2.0,
) -> FieldSystem:
    if n < 1 or m < 1 or len(omegas) != m:
        raise SystemDefinitionError("product_omega needs n, m >= 1 and one omega list per l")
    dim = n + m
    fields = [VectorField.coordinate(dim, k) for k in range(1, n + 1)]
    for l, family in enumerate(omegas, start=1):
        for text in family:
            w = _polynomial(text, dim, n)
            if w.is_zero():
                raise SystemDefinitionError("every omega_{l,i} must be nonzero")
            fields.append(VectorField.shear(w, n + l))
    origin = tuple(Fraction(0) for _ in range(dim))
    return FieldSystem(
        dim, tuple(fields), _box(dim, half_width), name=f"product_omega({n},{m})", certificate_points=(origin,)
    )


@register("circle3d", "{d1, d2, (x1^2 + x2^2 - 1) d3} on R^3")
def circle3d(half_width: float = 2.0) -> FieldSystem:
    fields = (
        VectorField.coordinate(3, 1),
        VectorField.coordinate(3, 2),
        parse_field("(x1^2 + x2^2 - 1) d3", 3),
    )
    points = (
        (Fraction(1), Fraction(0), Fraction(0)),
        (Fraction(0), Fraction(1), Fraction(0)),
        (Fraction(0), Fraction(0), Fraction(0)),
    )
    return FieldSystem(3, fields, _box(3, half_width), name="circle3d", certificate_points=points)


@register("motion_plane", "{d1, sin(x1) d2} on R^2")
def motion_plane(half_width: float = 4.0) -> FieldSystem:
    fields = (VectorField.coordinate(2, 1), parse_field("sin(x1) d2", 2))
    points = ((Fraction(0), Fraction(0)), (math.pi, 0.0))
    return FieldSystem(2, fields, _box(2, half_width), name="motion_plane", certificate_points=points)


@register("torus_sin", "{d1, sin(x1) d2} on the torus [0, 2pi)^2")
def torus_sin() -> FieldSystem:
    fields = (VectorField.coordinate(2, 1), parse_field("sin(x1) d2", 2))
    points = ((Fraction(0), Fraction(0)), (math.pi, 0.0))
    return FieldSystem(
        2, fields, Torus((Fraction(2), Fraction(2))), name="torus_sin", certificate_points=points
    )


@register("motion_group", "left-invariant T, X on the universal cover of the plane motion group")
def motion_group(half_width: float = 4.0) -> FieldSystem:
    fields = (
        VectorField.coordinate(3, 1, label="T"),
        parse_field("-sin(x1) d2 + cos(x1) d3", 3, label="X"),
    )
    origin = (Fraction(0), Fraction(0), Fraction(0))
    return FieldSystem(3, fields, _box(3, half_width), name="motion_group", certificate_points=(origin,))


@register("trig3d", "{d1, sin(x1) d2, cos(x1) d3} on R^3")
def trig3d(half_width: float = 4.0) -> FieldSystem:
    fields = (
        VectorField.coordinate(3, 1),
        parse_field("sin(x1) d2", 3),
        parse_field("cos(x1) d3", 3),
    )
    origin = (Fraction(0), Fraction(0), Fraction(0))
    return FieldSystem(3, fields, _box(3, half_width), name="trig3d", certificate_points=(origin,))


@register("affine_planted", "divergence-free realisation of the affine algebra [A, B] = B")
def affine_planted(half_width: float = 2.0) -> FieldSystem:
    fields = (
        parse_field("-1/2*x1 d1 + 1/2*x2 d2", 2, label="A"),
        parse_field("x2 d1", 2, label="B"),
    )
    return FieldSystem(2, fields, _box(2, half_width), name="affine_planted")
