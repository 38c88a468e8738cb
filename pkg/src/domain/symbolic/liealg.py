"""
Commutator closure of a generating family and the three structural verdicts
built on it: nilpotency (lower central series), type (R) and Hormander's
rank condition.

The closure works in the exact coordinate space of VectorField.coordinates(),
so every independence decision and every structure constant is a rational
number; floating point only enters the type (R) eigenvalue sampling and the
rank checks at irrational points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy

from src.base.core.exceptions import DimensionMismatchError, SystemDefinitionError
from src.domain.symbolic.fields import FieldSystem, VectorField, bracket
from src.domain.symbolic.linear import EchelonBasis, SparseRow, rank

logger = logging.getLogger(__name__)

CLOSED = "closed"
BUDGET_EXCEEDED = "budget_exceeded"

Structure = dict[tuple[int, int], SparseRow]


@dataclass(frozen=True)
class ClosureStatus:
    kind: str
    dim: int
    budget: str | None = None  # "max_dim" or "max_depth" when exceeded

    @property
    def closed(self) -> bool:
        return self.kind == CLOSED

    def describe(self) -> str:
        if self.closed:
            return f"Closed({self.dim})"
        return f"BudgetExceeded({self.budget}): not finite-dimensional within budget"


@dataclass(frozen=True)
class ClosureResult:
    basis: tuple[VectorField, ...]
    structure: Structure
    bracket_depth: tuple[int, ...]
    status: ClosureStatus
    generator_coordinates: tuple[SparseRow, ...] = ()
    _echelon: EchelonBasis | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.bracket_depth)

    @classmethod
    def from_structure_constants(
        cls, constants: Mapping[tuple[int, int], Mapping[int, Fraction | int]], dim: int
    ) -> ClosureResult:
        """
        An abstract Lie algebra given by [b_i, b_j] = sum_m C[i, j][m] b_m for i < j
        (0-based). The opposite pairs are filled in by antisymmetry.
        """
        structure: Structure = {}
        for (i, j), row in constants.items():
            if not (0 <= i < dim and 0 <= j < dim) or any(not 0 <= m < dim for m in row):
                raise DimensionMismatchError(f"structure constant index out of range for dim {dim}")
            if i == j:
                if any(row.values()):
                    raise SystemDefinitionError(f"[b{i}, b{i}] must vanish")
                continue
            sparse = SparseRow(row)
            if sparse:
                structure[(i, j)] = sparse
                structure[(j, i)] = sparse * -1
        return cls(
            basis=(),
            structure=structure,
            bracket_depth=(1,) * dim,
            status=ClosureStatus(CLOSED, dim),
        )

    def constant(self, i: int, j: int, m: int) -> Fraction:
        return self.structure.get((i, j), SparseRow())[m]

    def bracket_coordinates(self, u: SparseRow, v: SparseRow) -> SparseRow:
        """[u, v] for elements given by basis coordinates."""
        out = SparseRow()
        for i, ui in u.items():
            for j, vj in v.items():
                row = self.structure.get((i, j))
                if row:
                    out.iadd_coef(ui * vj, row)
        return out

    def ad_matrices(self) -> np.ndarray:
        """Float array of shape (d, d, d); ad[i][m, j] = C[i, j][m]."""
        d = self.dim
        ad = np.zeros((d, d, d))
        for (i, j), row in self.structure.items():
            for m, c in row.items():
                ad[i, m, j] = float(c)
        return ad

    def ad_exact(self, xi: Sequence[Fraction]) -> list[list[Fraction]]:
        d = self.dim
        matrix = [[Fraction(0)] * d for _ in range(d)]
        for (i, j), row in self.structure.items():
            if xi[i] == 0:
                continue
            for m, c in row.items():
                matrix[m][j] += xi[i] * c
        return matrix

    def express(self, x: VectorField) -> SparseRow | None:
        """Exact coordinates of a field in the closed basis, or None outside the span."""
        if self._echelon is None:
            raise ValueError("abstract algebras have no field realisation")
        return self._echelon.coordinates(x.coordinates())

    def is_antisymmetric(self) -> bool:
        for (i, j), row in self.structure.items():
            if self.structure.get((j, i), SparseRow()) != row * -1:
                return False
        return all((i, i) not in self.structure for i in range(self.dim))

    def jacobi_defect(self) -> list[tuple[int, int, int]]:
        """Triples (i, j, k) where the Jacobi identity fails (empty when it holds)."""
        d = self.dim
        units = [SparseRow({i: Fraction(1)}) for i in range(d)]
        failures = []
        for i in range(d):
            for j in range(i + 1, d):
                for k in range(j + 1, d):
                    total = self.bracket_coordinates(
                        units[i], self.bracket_coordinates(units[j], units[k])
                    )
                    total += self.bracket_coordinates(
                        units[j], self.bracket_coordinates(units[k], units[i])
                    )
                    total += self.bracket_coordinates(
                        units[k], self.bracket_coordinates(units[i], units[j])
                    )
                    if total:
                        failures.append((i, j, k))
        return failures


def close(system: FieldSystem, max_dim: int = 64, max_depth: int = 12) -> ClosureResult:
    """
    Breadth-first bracket saturation. Pairs are processed by increasing
    depth d_i + d_j, so every basis element carries its minimal nesting depth.
    """
    if max_dim < system.n_fields or max_depth < 1:
        raise SystemDefinitionError(
            f"budgets too small: max_dim={max_dim} (< {system.n_fields} fields) or max_depth={max_depth}"
        )
    echelon = EchelonBasis()
    basis: list[VectorField] = []
    depth: list[int] = []
    for x in system.fields:
        if x.dim != system.dim:
            raise DimensionMismatchError(f"field {x} does not live on a {system.dim}-manifold")
        if echelon.insert(x.coordinates()):
            basis.append(x)
            depth.append(1)

    structure: Structure = {}
    status: ClosureStatus | None = None
    level = 2
    while status is None and level <= 2 * max(depth, default=0):
        pairs = [
            (i, j)
            for i in range(len(basis))
            for j in range(i + 1, len(basis))
            if depth[i] + depth[j] == level
        ]
        for i, j in pairs:
            z = bracket(basis[i], basis[j])
            remainder, coordinates = echelon.reduce(z.coordinates())
            if remainder:
                if level > max_depth:
                    status = ClosureStatus(BUDGET_EXCEEDED, len(basis), "max_depth")
                    break
                if len(basis) >= max_dim:
                    status = ClosureStatus(BUDGET_EXCEEDED, len(basis), "max_dim")
                    break
                echelon.insert(z.coordinates())
                coordinates = SparseRow({len(basis): Fraction(1)})
                basis.append(VectorField(z.components, f"[{basis[i].label or i + 1},{basis[j].label or j + 1}]"))
                depth.append(level)
                logger.debug(f"New basis element b{len(basis)} at depth {level}: {z}")
            if coordinates:
                structure[(i, j)] = coordinates
                structure[(j, i)] = coordinates * -1
        level += 1

    if status is None:
        status = ClosureStatus(CLOSED, len(basis))
    generator_coordinates = tuple(
        echelon.coordinates(x.coordinates()) or SparseRow() for x in system.fields
    )
    logger.info(f"Closure of {system.name}: {status.describe()}, depths {depth}")
    return ClosureResult(
        basis=tuple(basis),
        structure=structure,
        bracket_depth=tuple(depth),
        status=status,
        generator_coordinates=generator_coordinates,
        _echelon=echelon,
    )


# --- nilpotency --------------------------------------------------------


@dataclass(frozen=True)
class Nilpotency:
    nilpotent: bool
    step: int | None
    series_dims: tuple[int, ...]

    def describe(self) -> str:
        return f"Yes(step {self.step})" if self.nilpotent else "No"


def lower_central_series(c: ClosureResult) -> list[int]:
    """Dimensions of g^(1) = g, g^(j+1) = [g, g^(j)] until they vanish or stabilise."""
    d = c.dim
    units = [SparseRow({i: Fraction(1)}) for i in range(d)]
    current = units
    dims = [d]
    while current:
        nxt = EchelonBasis()
        vectors = []
        for u in units:
            for v in current:
                w = c.bracket_coordinates(u, v)
                if w and nxt.insert(w):
                    vectors.append(w)
        dims.append(len(vectors))
        if len(vectors) == len(current):
            break
        current = vectors
    return dims


def nilpotency(c: ClosureResult) -> Nilpotency:
    _require_closed(c)
    dims = lower_central_series(c)
    if dims[-1] == 0:
        return Nilpotency(True, max(len(dims) - 1, 1), tuple(dims))
    return Nilpotency(False, None, tuple(dims))


# --- type (R) ----------------------------------------------------------

NILPOTENT_HENCE = "nilpotent_hence"
SAMPLED_PASS = "sampled_pass"
COUNTEREXAMPLE = "counterexample"

ROOT_DIGITS = 15
_LAMBDA = sympy.Symbol("lambda")


@dataclass(frozen=True)
class TypeRVerdict:
    kind: str
    n_samples: int = 0
    tolerance: float = 0.0
    coordinates: tuple[Fraction, ...] | None = None
    eigenvalue: complex | None = None

    @property
    def passed(self) -> bool:
        return self.kind != COUNTEREXAMPLE

    def describe(self) -> str:
        if self.kind == NILPOTENT_HENCE:
            return "NilpotentHence"
        if self.kind == SAMPLED_PASS:
            return f"SampledPass({self.n_samples}, {self.tolerance:g})"
        return f"Counterexample(xi={[str(x) for x in self.coordinates]}, lambda={self.eigenvalue})"


def _random_rational(rng: np.random.Generator, d: int) -> tuple[Fraction, ...]:
    while True:
        numerators = rng.integers(-12, 13, size=d)
        denominators = rng.integers(1, 9, size=d)
        xi = tuple(Fraction(int(p), int(q)) for p, q in zip(numerators, denominators))
        if any(xi):
            return xi


def squarefree_spectrum(matrix: list[list[Fraction]]) -> np.ndarray:
    """
    Distinct eigenvalues of a rational matrix, as roots of the squarefree part
    of its exact characteristic polynomial. Defective eigenvalues do not split.
    """
    exact = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in matrix])
    squarefree = exact.charpoly(_LAMBDA).sqf_part()
    if squarefree.degree() < 1:
        return np.zeros(0, dtype=complex)
    return np.array([complex(root) for root in squarefree.nroots(n=ROOT_DIGITS)], dtype=complex)


def type_r(
    c: ClosureResult, n_samples: int = 200, tol: float = 1e-9, seed: int = 0
) -> TypeRVerdict:
    """
    Purely imaginary spectrum of ad(X). Nilpotent algebras pass exactly. Otherwise
    ad(xi) is checked at every basis unit vector and at `n_samples` seeded random
    rational xi; a float violation is confirmed on the exact characteristic
    polynomial before it is reported.
    """
    _require_closed(c)
    if nilpotency(c).nilpotent:
        return TypeRVerdict(NILPOTENT_HENCE)

    d = c.dim
    ad = c.ad_matrices()
    rng = np.random.default_rng(seed)
    samples: list[tuple[Fraction, ...]] = [
        tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)
    ]
    samples += [_random_rational(rng, d) for _ in range(n_samples)]

    for xi in samples:
        matrix = np.tensordot(np.array([float(x) for x in xi]), ad, axes=1)
        bound = tol * (1.0 + np.linalg.norm(matrix, 2))
        eigenvalues = np.linalg.eigvals(matrix)
        if np.max(np.abs(eigenvalues.real), initial=0.0) <= bound:
            continue
        confirmed = squarefree_spectrum(c.ad_exact(xi))
        worst = confirmed[np.argmax(np.abs(confirmed.real))] if confirmed.size else 0j
        if abs(worst.real) > bound:
            logger.info(f"type (R) counterexample at xi={xi}: eigenvalue {worst}")
            return TypeRVerdict(COUNTEREXAMPLE, len(samples), tol, xi, complex(worst))
        logger.debug(f"Float eigenvalue violation at xi={xi} not confirmed exactly")

    return TypeRVerdict(SAMPLED_PASS, n_samples, tol)


# --- Hormander ---------------------------------------------------------

CHECKED_AT_POINTS = "checked_at_points"
RANK_DROP_FOUND = "rank_drop_found"


@dataclass(frozen=True)
class HormanderVerdict:
    kind: str
    points: tuple[tuple[float, ...], ...]
    min_rank: int
    exact_points: int = 0
    rank_drop_point: tuple[float, ...] | None = None

    @property
    def passed(self) -> bool:
        return self.kind == CHECKED_AT_POINTS

    def describe(self) -> str:
        if self.passed:
            return f"CheckedAtPoints({len(self.points)} points, min rank {self.min_rank})"
        return f"RankDropFound({self.rank_drop_point})"


def _exact_rank(basis: Iterable[VectorField], point: Sequence[Fraction]) -> int | None:
    rows = []
    for x in basis:
        row = SparseRow()
        for j, comp in enumerate(x.components):
            value = comp.evaluate_exact(point)
            if value is None:
                return None
            if value:
                row[j] = value
        rows.append(row)
    return rank(rows)


def _is_rational_point(point: Sequence) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in point)


def hormander(
    c: ClosureResult,
    system: FieldSystem,
    points: Sequence[Sequence[Fraction | float]] = (),
    n_random: int = 20,
    seed: int = 0,
) -> HormanderVerdict:
    """Rank of the closed basis at certificate, user and random points."""
    _require_closed(c)
    if not c.basis:
        raise ValueError("hormander needs a closure computed from a field system")
    k = system.dim
    rng = np.random.default_rng(seed)
    candidates: list[Sequence] = list(system.certificate_points) + list(points)
    candidates += [tuple(p) for p in system.domain.sample(rng, n_random)]

    checked: list[tuple[float, ...]] = []
    min_rank = k
    exact = 0
    for point in candidates:
        if len(point) != k:
            raise DimensionMismatchError(f"point {point} does not have {k} coordinates")
        r = _exact_rank(c.basis, point) if _is_rational_point(point) else None
        if r is None:
            matrix = np.stack([x.evaluate(np.asarray(point, dtype=float)) for x in c.basis])
            r = int(np.linalg.matrix_rank(matrix))
        else:
            exact += 1
        as_float = tuple(float(v) for v in point)
        checked.append(as_float)
        min_rank = min(min_rank, r)
        if r < k:
            logger.info(f"Hormander rank {r} < {k} at {as_float}")
            return HormanderVerdict(RANK_DROP_FOUND, tuple(checked), r, exact, as_float)
    return HormanderVerdict(CHECKED_AT_POINTS, tuple(checked), min_rank, exact)


def _require_closed(c: ClosureResult) -> None:
    if not c.status.closed:
        raise ValueError(f"verdicts need a closed algebra, got {c.status.describe()}")
