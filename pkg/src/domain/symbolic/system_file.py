"""
System definition files:

    # comment
    name   = my-system                       (optional)
    dim    = 3
    domain = box [-2..2; -2..2; -2..2]       | torus [2pi, 2pi]
    fields = [ "d1", "d2", "(x1^2 + x2^2 - 1) d3" ]
    points = [ "1, 0, 0", "0, 1, 0" ]        (optional Hormander certificate points)
"""

import logging
import re
from fractions import Fraction
from pathlib import Path

from src.base.core.exceptions import ExprParseError, SystemDefinitionError
from src.domain.symbolic.fields import Box, FieldSystem, Torus, parse_field

logger = logging.getLogger(__name__)

_KEY_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*=", re.MULTILINE)
_QUOTED_RE = re.compile(r'"([^"]*)"')
_PERIOD_RE = re.compile(r"^\s*(\d+(?:/\d+)?)?\s*\*?\s*pi\s*$")


def _split_keys(text: str) -> dict[str, str]:
    text = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    matches = list(_KEY_RE.finditer(text))
    values: dict[str, str] = {}
    for current, following in zip(matches, matches[1:] + [None]):
        end = following.start() if following else len(text)
        key = current.group(1).lower()
        if key in values:
            raise SystemDefinitionError(f"duplicate key {key!r}")
        values[key] = text[current.end() : end].strip()
    return values


def _bracketed(value: str, key: str) -> str:
    value = value.strip()
    if not (value.startswith("[") and value.endswith("]")):
        raise SystemDefinitionError(f"{key} must be enclosed in [ ]")
    return value[1:-1]


def parse_domain(value: str, dim: int) -> Box | Torus:
    kind, _, rest = value.strip().partition(" ")
    body = _bracketed(rest, "domain")
    if kind == "box":
        lo, hi = [], []
        for axis in body.split(";"):
            try:
                a, b = axis.split("..")
                lo.append(float(a))
                hi.append(float(b))
            except ValueError as e:
                raise SystemDefinitionError(f"bad box axis {axis.strip()!r}, expected lo..hi") from e
        domain: Box | Torus = Box(tuple(lo), tuple(hi))
    elif kind == "torus":
        periods = []
        for item in body.split(","):
            match = _PERIOD_RE.match(item)
            if match is None:
                raise SystemDefinitionError(f"torus period {item.strip()!r} must be a rational multiple of pi")
            periods.append(Fraction(match.group(1) or 1))
        domain = Torus(tuple(periods))
    else:
        raise SystemDefinitionError(f"unknown domain kind {kind!r}; expected box or torus")
    if domain.dim != dim:
        raise SystemDefinitionError(f"domain has {domain.dim} axes but dim = {dim}")
    return domain


def _parse_point(text: str, dim: int) -> tuple[Fraction, ...]:
    coords: list[Fraction] = []
    for item in text.split(","):
        item = item.strip()
        try:
            coords.append(Fraction(item))
        except ValueError as e:
            raise SystemDefinitionError(f"bad coordinate {item!r} in point {text!r}") from e
    if len(coords) != dim:
        raise SystemDefinitionError(f"point {text!r} does not have {dim} coordinates")
    return tuple(coords)


def parse_system(text: str, default_name: str = "custom") -> FieldSystem:
    values = _split_keys(text)
    for required in ("dim", "domain", "fields"):
        if required not in values:
            raise SystemDefinitionError(f"missing key {required!r}")
    try:
        dim = int(values["dim"])
    except ValueError as e:
        raise SystemDefinitionError(f"dim must be an integer, got {values['dim']!r}") from e
    if dim < 1:
        raise SystemDefinitionError("dim must be >= 1")

    domain = parse_domain(values["domain"], dim)
    field_texts = _QUOTED_RE.findall(_bracketed(values["fields"], "fields"))
    if not field_texts:
        raise SystemDefinitionError("fields list is empty")
    fields = []
    for i, field_text in enumerate(field_texts, start=1):
        try:
            fields.append(parse_field(field_text, dim, label=f"X{i}"))
        except ExprParseError as e:
            raise SystemDefinitionError(f"field {i} ({field_text!r}): {e}") from e

    points: tuple = ()
    if "points" in values:
        points = tuple(
            _parse_point(p, dim) for p in _QUOTED_RE.findall(_bracketed(values["points"], "points"))
        )

    return FieldSystem(
        dim,
        tuple(fields),
        domain,
        name=values.get("name", default_name),
        certificate_points=points,
    )


def load_system(path: str | Path) -> FieldSystem:
    path = Path(path)
    logger.info(f"Loading system definition from {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SystemDefinitionError(f"cannot read {path}: {e}") from e
    return parse_system(text, default_name=path.stem)
