"""
Monte-Carlo oracle for the heat semigroup and word-flow transference checks.

Paths follow dx = sum_i X_i(x) sqrt(2) dW_i + sum_i (nabla_{X_i} X_i)(x) dt,
whose generator is sum_i X_i^2, so endpoints sample e^{-tL} with the same
time convention as the PDE layer. On an embedded grid the coefficients are
read at the capped coordinates and positions wrap, which is the generator
the PDE layer discretises.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from src.base.core.exceptions import DimensionMismatchError, GridMismatchError, SystemDefinitionError
from src.domain.numerics.grid import GridSpec
from src.domain.numerics.metric import DistanceField, read_distance
from src.domain.symbolic.fields import FieldSystem, Torus, VectorField, flow

logger = logging.getLogger(__name__)

BLOCK_SIZE = 65536


@dataclass
class PathBatch:
    system: FieldSystem
    x0: np.ndarray
    t: float
    n_paths: int
    n_steps: int
    seed: int
    endpoints: np.ndarray  # (n_finite, k)
    escaped: int = 0

    def displacements(self) -> np.ndarray:
        return self.endpoints - self.x0

    def moments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis mean displacement, mean squared displacement and its standard error."""
        delta = self.displacements()
        sq = delta**2
        n = max(len(delta), 1)
        return delta.mean(axis=0), sq.mean(axis=0), sq.std(axis=0, ddof=1) / math.sqrt(n)

    def describe(self) -> dict:
        mean, second, stderr = self.moments()
        return {
            "x0": self.x0.tolist(),
            "t": self.t,
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "seed": self.seed,
            "escaped": self.escaped,
            "mean_displacement": mean.tolist(),
            "second_moment": second.tolist(),
            "second_moment_stderr": stderr.tolist(),
        }


def _coefficient_map(system: FieldSystem, grid: GridSpec | None) -> tuple[Callable, Callable]:
    if grid is not None:
        return grid.coefficient_points, grid.wrap
    if isinstance(system.domain, Torus):
        return (lambda x: x), system.domain.wrap
    return (lambda x: x), (lambda x: x)


def _drift(system: FieldSystem) -> VectorField | None:
    drift = system.ito_drift()
    return None if drift.is_zero() else drift


def _increment(
    system: FieldSystem,
    x: np.ndarray,
    dw: np.ndarray,
    dt: float,
    coefficients: Callable,
    drift: VectorField | None,
) -> np.ndarray:
    y = coefficients(x)
    step = np.einsum("nkm,nm->nk", system.field_matrix(y), dw)
    if drift is not None:
        step += dt * drift.evaluate(y)
    return step


def _simulate_block(
    system: FieldSystem,
    x0: np.ndarray,
    t: float,
    n_steps: int,
    n: int,
    rng: np.random.Generator,
    grid: GridSpec | None,
) -> tuple[np.ndarray, int]:
    coefficients, wrap = _coefficient_map(system, grid)
    drift = _drift(system)
    dt = t / n_steps
    scale = math.sqrt(2.0 * dt)
    x = np.tile(x0, (n, 1))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            dw = rng.standard_normal((n, system.n_fields)) * scale
            x = wrap(x + _increment(system, x, dw, dt, coefficients, drift))
    finite = np.all(np.isfinite(x), axis=1)
    return x[finite], int(n - finite.sum())


def sample_paths(
    system: FieldSystem,
    x0: Sequence[float],
    t: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    grid: GridSpec | None = None,
    block_size: int = BLOCK_SIZE,
    workers: int = 1,
) -> PathBatch:
    """
    Euler-Maruyama endpoints. Blocks of `block_size` paths each get a child
    of SeedSequence(seed) and are concatenated in block order, so the
    result does not depend on `workers`.
    """
    start = np.asarray(x0, dtype=float)
    if start.shape != (system.dim,):
        raise DimensionMismatchError(f"start point of length {start.size} for a {system.dim}-dimensional system")
    if t <= 0 or n_steps < 1 or n_paths < 1:
        raise SystemDefinitionError("paths need t > 0, n_steps >= 1 and n_paths >= 1")
    if grid is not None and grid.dim != system.dim:
        raise GridMismatchError("grid and system dimensions differ")

    n_blocks = math.ceil(n_paths / block_size)
    sizes = [min(block_size, n_paths - b * block_size) for b in range(n_blocks)]
    children = np.random.SeedSequence(seed).spawn(n_blocks)

    def run(b: int) -> tuple[np.ndarray, int]:
        rng = np.random.default_rng(children[b])
        return _simulate_block(system, start, t, n_steps, sizes[b], rng, grid)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, range(n_blocks)))
    endpoints = np.concatenate([r[0] for r in results], axis=0)
    escaped = sum(r[1] for r in results)
    if escaped:
        logger.warning(f"{escaped} of {n_paths} paths escaped to non-finite values")
    logger.info(f"Simulated {n_paths} paths of {system.name} to t={t:g} in {n_blocks} blocks")
    return PathBatch(system, start, t, n_paths, n_steps, seed, endpoints, escaped)


def _simulate_coupled_block(
    system: FieldSystem,
    x0: np.ndarray,
    t: float,
    n_steps: int,
    n: int,
    rng: np.random.Generator,
    grid: GridSpec | None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Endpoints after n_steps and 2 n_steps driven by one Brownian path: each
    coarse increment is the sum of two fine ones. Positions stay unwrapped so
    displacements are comparable on periodic axes.
    """
    coefficients, _ = _coefficient_map(system, grid)
    drift = _drift(system)
    dt = t / (2 * n_steps)
    scale = math.sqrt(2.0 * dt)
    coarse = np.tile(x0, (n, 1))
    fine = coarse.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            dw1 = rng.standard_normal((n, system.n_fields)) * scale
            dw2 = rng.standard_normal((n, system.n_fields)) * scale
            coarse = coarse + _increment(system, coarse, dw1 + dw2, 2 * dt, coefficients, drift)
            fine = fine + _increment(system, fine, dw1, dt, coefficients, drift)
            fine = fine + _increment(system, fine, dw2, dt, coefficients, drift)
    finite = np.all(np.isfinite(coarse), axis=1) & np.all(np.isfinite(fine), axis=1)
    return coarse[finite], fine[finite]


def step_halving(
    system: FieldSystem,
    x0: Sequence[float],
    t: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    grid: GridSpec | None = None,
    block_size: int = BLOCK_SIZE,
    workers: int = 1,
) -> float:
    """
    Largest shift of a per-axis second moment of the displacement when the
    step halves, in standard errors of the fine estimate. Both runs share
    their Brownian increments, so the shift is discretisation bias.
    """
    start = np.asarray(x0, dtype=float)
    if start.shape != (system.dim,):
        raise DimensionMismatchError(f"start point of length {start.size} for a {system.dim}-dimensional system")
    if t <= 0 or n_steps < 1 or n_paths < 2:
        raise SystemDefinitionError("step halving needs t > 0, n_steps >= 1 and n_paths >= 2")

    n_blocks = math.ceil(n_paths / block_size)
    sizes = [min(block_size, n_paths - b * block_size) for b in range(n_blocks)]
    children = np.random.SeedSequence(seed).spawn(n_blocks)

    def run(b: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(children[b])
        return _simulate_coupled_block(system, start, t, n_steps, sizes[b], rng, grid)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, range(n_blocks)))
    coarse = (np.concatenate([r[0] for r in results], axis=0) - start) ** 2
    fine = (np.concatenate([r[1] for r in results], axis=0) - start) ** 2
    if len(fine) < 2:
        raise SystemDefinitionError("every coupled path escaped to non-finite values")
    stderr = fine.std(axis=0, ddof=1) / math.sqrt(len(fine))
    shift = np.abs(coarse.mean(axis=0) - fine.mean(axis=0))
    ratio = np.where(stderr > 0, shift / np.maximum(stderr, 1e-300), np.where(shift > 0, np.inf, 0.0))
    logger.info(f"Step halving {n_steps} -> {2 * n_steps}: second moments move {ratio.max():.3f} standard errors")
    return float(ratio.max())


@dataclass
class Histogram:
    grid: GridSpec
    t: float
    values: np.ndarray  # flat density w.r.t. the cell measure
    n_outside: int = 0

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_measure)

    def to_csv(self) -> str:
        return self.grid.to_csv(self.values)


def kernel_histogram(batch: PathBatch, grid: GridSpec) -> Histogram:
    """Endpoints binned to their nearest node, normalised by all simulated paths."""
    pts = grid.wrap(batch.endpoints)
    idx = grid.multi_index(pts)
    inside = np.all(idx >= 0, axis=1)
    flat = np.ravel_multi_index(tuple(idx[inside].T), grid.counts)
    counts = np.bincount(flat, minlength=grid.size).astype(float)
    density = counts / (batch.n_paths * grid.cell_measure)
    return Histogram(grid, batch.t, density, int((~inside).sum()) + batch.escaped)


def compare_kernels(hist, snapshot) -> float:
    """Total variation 1/2 sum |a - b| cell; both sides need the same grid and time."""
    hist.grid.check_same(snapshot.grid)
    if not math.isclose(hist.t, snapshot.t, rel_tol=1e-12, abs_tol=1e-15):
        raise GridMismatchError(f"histogram at t={hist.t:g} against a kernel at t={snapshot.t:g}")
    return float(0.5 * np.sum(np.abs(hist.values - snapshot.values)) * hist.grid.cell_measure)


# --- words --------------------------------------------------------------


@dataclass(frozen=True)
class Word:
    letters: tuple[tuple[int, float], ...] = ()

    @property
    def length(self) -> float:
        return float(sum(abs(t) for _, t in self.letters))

    def to_text(self) -> str:
        if not self.letters:
            return "e"
        return " ".join(f"exp({t:+.6g} X{i + 1})" for i, t in self.letters)


def word_action(system: FieldSystem, word: Word, x: Sequence[float], steps: int = 64) -> np.ndarray:
    """Flows of the letters composed left to right."""
    state = np.asarray(x, dtype=float)
    for i, t in word.letters:
        if not 0 <= i < system.n_fields:
            raise SystemDefinitionError(f"word letter refers to field {i + 1} of {system.n_fields}")
        state = flow(system.fields[i], state, t, steps)
    return state


def random_word(n_fields: int, max_len: float, rng: np.random.Generator, p_stop: float = 0.35) -> Word:
    """Geometric letter count; a uniform total length split uniformly with random signs."""
    n = int(rng.geometric(p_stop))
    total = rng.uniform(0.0, max_len)
    split = rng.uniform(size=n)
    times = total * split / split.sum()
    signs = rng.choice((-1.0, 1.0), size=n)
    fields = rng.integers(0, n_fields, size=n)
    return Word(tuple((int(i), float(s * t)) for i, s, t in zip(fields, signs, times)))


@dataclass
class WordCheck:
    kind: str
    allowance: float
    n_words: int
    n_pass: int
    worst_ratio: float
    worst: dict = field(default_factory=dict)
    rows: list[tuple[float, float]] = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.n_pass == self.n_words

    @property
    def pass_rate(self) -> float:
        return self.n_pass / self.n_words if self.n_words else 1.0

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "allowance": self.allowance,
            "n_words": self.n_words,
            "n_pass": self.n_pass,
            "pass_rate": self.pass_rate,
            "worst_ratio": self.worst_ratio,
            "worst": self.worst,
            "passed": self.passed,
        }

    def to_csv(self) -> str:
        lines = ["length,distance"] + [f"{a:.12g},{b:.12g}" for a, b in self.rows]
        return "\n".join(lines) + "\n"


def _check_words(
    kind: str,
    system: FieldSystem,
    df: DistanceField,
    words: Sequence[Word],
    budget: Callable[[Word], float],
    allowance: float,
) -> WordCheck:
    x = df.grid.node(df.source)
    n_pass = 0
    worst_ratio, worst = 0.0, {}
    rows = []
    for word in words:
        end = word_action(system, word, x)
        d = read_distance(df, end)
        limit = budget(word)
        n_pass += d <= (1.0 + allowance) * limit
        rows.append((word.length, d))
        ratio = d / limit if limit > 0 else (0.0 if d == 0 else math.inf)
        if ratio > worst_ratio or not worst:
            worst_ratio = ratio
            worst = {"word": word.to_text(), "start": x.tolist(), "end": end.tolist(), "distance": d}
    return WordCheck(kind, allowance, len(words), int(n_pass), worst_ratio, worst, rows)


def transference_check(
    system: FieldSystem,
    df: DistanceField,
    n_words: int,
    max_len: float,
    seed: int,
    allowance: float = 0.05,
) -> WordCheck:
    """d(x, word(x)) <= (1 + allowance) |word| over seeded random horizontal words from x."""
    rng = np.random.default_rng(seed)
    words = [random_word(system.n_fields, max_len, rng) for _ in range(n_words)]
    return _check_words("transference", system, df, words, lambda w: w.length, allowance)


def support_check_qr(
    system: FieldSystem,
    df: DistanceField,
    r: float,
    n_words: int,
    seed: int,
    allowance: float = 0.05,
) -> WordCheck:
    """Every endpoint of a word of length at most r stays within (1 + allowance) r of x."""
    if r < 0:
        raise SystemDefinitionError("radius must be nonnegative")
    rng = np.random.default_rng(seed)
    words = [random_word(system.n_fields, r, rng) if r > 0 else Word() for _ in range(n_words)]
    return _check_words("support-qr", system, df, words, lambda w: r, allowance)
