"""
Empirical constants for the kernel and functional inequalities.

Each builder samples one refinement level and returns a BoundReport whose
constants are attained at recorded sample points; `merge_levels` then folds
a ladder of such reports into one, with drift measured between the last two
levels on the report's tracked constants.
"""

from __future__ import annotations

import itertools
import logging
import math
from typing import Mapping, Sequence

import numpy as np

from src.base.core.exceptions import EmptySampleError
from src.domain.models.reports import BoundReport, Extremizer
from src.domain.numerics.grid import GridSpec
from src.domain.numerics.metric import DistanceField, rim_weights
from src.domain.numerics.operators import DiscreteGenerator
from src.domain.numerics.semigroups import EIGEN, KernelSnapshot, grad_poisson, sqrt_apply

logger = logging.getLogger(__name__)

RELIABILITY_FLOOR = 1e-12
MAX_EXPONENT = 10.0
MIN_BALL_NODES = 16
BAND = 2


def _point(grid: GridSpec, node: int) -> list[float]:
    return [float(c) for c in grid.node(node)]


def _extremizer(
    grid: GridSpec,
    x: int,
    value: float,
    y: int | None = None,
    t: float | None = None,
    r: float | None = None,
    label: str | None = None,
) -> Extremizer:
    return Extremizer(
        x=_point(grid, x),
        y=_point(grid, y) if y is not None else None,
        t=t,
        r=r,
        value=float(value),
        label=label,
    )


def _distance_for(dfs: Mapping[int, DistanceField], node: int) -> DistanceField:
    try:
        return dfs[node]
    except KeyError:
        raise EmptySampleError(f"no distance field for source node {node}") from None


def shared_masks(levels: Sequence[Sequence[np.ndarray]]) -> list[list[np.ndarray]]:
    """
    Per-level sample masks ANDed entry by entry with the masks of the last
    two levels, so compared constants range over one sample set. Every
    level lists its masks in the same order over the same samples.
    """
    if len(levels) < 2:
        return [list(masks) for masks in levels]
    common = [a & b for a, b in zip(levels[-1], levels[-2])]
    return [[m & c for m, c in zip(masks, common)] for masks in levels]


# --- heat kernel --------------------------------------------------------


def gaussian_masks(
    snapshots: Sequence[KernelSnapshot],
    dfs: Mapping[int, DistanceField],
    samples: np.ndarray,
    volumes: Mapping[float, np.ndarray],
    floor: float = RELIABILITY_FLOOR,
    max_exponent: float = MAX_EXPONENT,
) -> list[np.ndarray]:
    """Reliable samples per snapshot: kernel above the floor, d^2 / t bounded, V(x, sqrt t) usable."""
    masks = []
    for snap in snapshots:
        d = _distance_for(dfs, snap.source).flat[samples]
        masks.append(
            np.isfinite(volumes[snap.t])
            & np.isfinite(d)
            & (snap.values[samples] >= floor)
            & (d**2 / snap.t <= max_exponent)
        )
    return masks


def gaussian_report(
    snapshots: Sequence[KernelSnapshot],
    dfs: Mapping[int, DistanceField],
    samples: np.ndarray,
    volumes: Mapping[float, np.ndarray],
    c_low: float = 3.5,
    c_up: float = 5.0,
    upper_ceiling: float = 100.0,
    lower_ceiling: float = 1e-4,
    floor: float = RELIABILITY_FLOOR,
    max_exponent: float = MAX_EXPONENT,
    masks: Sequence[np.ndarray] | None = None,
) -> BoundReport:
    """
    rho = h_t(x, y) V(x, sqrt t) over sample nodes x, with volumes[t][i] the
    ball volume at samples[i]. Reports sup rho exp(d^2 / (c_up t)) and
    inf rho exp(d^2 / (c_low t)) over the reliable samples (gaussian_masks
    unless `masks` is given).
    """
    if masks is None:
        masks = gaussian_masks(snapshots, dfs, samples, volumes, floor, max_exponent)
    upper, lower = -math.inf, math.inf
    arg_upper = arg_lower = None
    n_samples = n_excluded = 0
    for snap, mask in zip(snapshots, masks):
        d = _distance_for(dfs, snap.source).flat
        n_excluded += int(np.count_nonzero(~np.isfinite(volumes[snap.t])))
        nodes = samples[mask]
        if nodes.size == 0:
            continue
        n_samples += nodes.size
        rho = snap.values[nodes] * volumes[snap.t][mask]
        d2t = d[nodes] ** 2 / snap.t
        up = rho * np.exp(d2t / c_up)
        low = rho * np.exp(d2t / c_low)
        i, j = int(np.argmax(up)), int(np.argmin(low))
        if up[i] > upper:
            upper, arg_upper = float(up[i]), (snap, int(nodes[i]))
        if low[j] < lower:
            lower, arg_lower = float(low[j]), (snap, int(nodes[j]))
    if n_samples == 0:
        raise EmptySampleError("no reliable (x, y, t) samples for the Gaussian bounds")

    extremizers = {}
    for key, arg, value in (("upper", arg_upper, upper), ("lower", arg_lower, lower)):
        snap, x = arg
        extremizers[key] = _extremizer(snap.grid, x, value, y=snap.source, t=snap.t)
    within = upper <= upper_ceiling and lower >= lower_ceiling
    return BoundReport(
        claim="gaussian",
        description="two-sided Gaussian bounds on h_t(x, y) V(x, sqrt t)",
        constants={"upper": upper, "lower": lower, "c_low": c_low, "c_up": c_up},
        extremizers=extremizers,
        n_samples=n_samples,
        n_excluded=n_excluded,
        ceilings={"upper": upper_ceiling, "lower": lower_ceiling},
        tracked=["upper", "lower"],
        within_ceilings=within,
        passed=within,
    )


def on_diagonal_masks(
    snapshots: Sequence[KernelSnapshot], volumes: Mapping[tuple[int, float], float]
) -> list[np.ndarray]:
    return [np.asarray(math.isfinite(volumes[snap.source, snap.t])) for snap in snapshots]


def on_diagonal_report(
    snapshots: Sequence[KernelSnapshot],
    volumes: Mapping[tuple[int, float], float],
    spread_ceiling: float = 50.0,
    masks: Sequence[np.ndarray] | None = None,
) -> BoundReport:
    """h_t(y, y) V(y, sqrt t) stays within [c, C]; reports C / c. Volumes are keyed by (y, t)."""
    if masks is None:
        masks = on_diagonal_masks(snapshots, volumes)
    values: list[tuple[float, KernelSnapshot]] = []
    n_excluded = 0
    for snap, keep in zip(snapshots, masks):
        if not keep:
            n_excluded += 1
            continue
        values.append((snap.at(snap.source) * volumes[snap.source, snap.t], snap))
    if not values:
        raise EmptySampleError("no usable on-diagonal ball")
    lo = min(values, key=lambda v: v[0])
    hi = max(values, key=lambda v: v[0])
    spread = hi[0] / lo[0] if lo[0] > 0 else math.inf
    within = spread <= spread_ceiling
    return BoundReport(
        claim="on-diagonal",
        description="on-diagonal h_t(y, y) V(y, sqrt t) range",
        constants={"min": lo[0], "max": hi[0], "spread": spread},
        extremizers={
            "min": _extremizer(lo[1].grid, lo[1].source, lo[0], t=lo[1].t),
            "max": _extremizer(hi[1].grid, hi[1].source, hi[0], t=hi[1].t),
        },
        n_samples=len(values),
        n_excluded=n_excluded,
        ceilings={"spread": spread_ceiling},
        tracked=["spread"],
        within_ceilings=within,
        passed=within,
    )


# --- Poisson kernel -----------------------------------------------------


def poisson_masks(
    pairs: Sequence[tuple[KernelSnapshot, KernelSnapshot]],
    samples: np.ndarray,
    floor: float = RELIABILITY_FLOOR,
) -> list[np.ndarray]:
    masks = []
    for p1, p2 in pairs:
        p1.grid.check_same(p2.grid)
        interior = p1.grid.interior_mask(p1.source)[samples]
        masks.append(interior & (p1.values[samples] >= floor) & (p2.values[samples] >= floor))
    return masks


def poisson_report(
    gen: DiscreteGenerator,
    pairs: Sequence[tuple[KernelSnapshot, KernelSnapshot]],
    samples: np.ndarray,
    ratio_ceiling: float = 16.0,
    gradient_ceiling: float = 10.0,
    floor: float = RELIABILITY_FLOOR,
    masks: Sequence[np.ndarray] | None = None,
) -> BoundReport:
    """Range of p_2t / p_t and sup of t |D_i p_t| / p_t over (p_t, p_2t) pairs at the sample nodes."""
    if masks is None:
        masks = poisson_masks(pairs, samples, floor)
    ratio_min, ratio_max, grad_sup = math.inf, -math.inf, -math.inf
    arg_min = arg_max = arg_grad = None
    n_samples = 0
    for (p1, p2), mask in zip(pairs, masks):
        nodes = samples[mask]
        if nodes.size == 0:
            continue
        n_samples += nodes.size
        ratio = p2.values[nodes] / p1.values[nodes]
        i, j = int(np.argmin(ratio)), int(np.argmax(ratio))
        if ratio[i] < ratio_min:
            ratio_min, arg_min = float(ratio[i]), (p1, int(nodes[i]))
        if ratio[j] > ratio_max:
            ratio_max, arg_max = float(ratio[j]), (p1, int(nodes[j]))
        for field_index in range(len(gen.fields)):
            grad = grad_poisson(gen, p1, field_index).values[nodes]
            scaled = p1.t * np.abs(grad) / p1.values[nodes]
            k = int(np.argmax(scaled))
            if scaled[k] > grad_sup:
                grad_sup, arg_grad = float(scaled[k]), (p1, int(nodes[k]), field_index)
    if n_samples == 0:
        raise EmptySampleError("no reliable samples for the Poisson bounds")

    extremizers = {
        "ratio_min": _extremizer(arg_min[0].grid, arg_min[1], ratio_min, y=arg_min[0].source, t=arg_min[0].t),
        "ratio_max": _extremizer(arg_max[0].grid, arg_max[1], ratio_max, y=arg_max[0].source, t=arg_max[0].t),
        "gradient": _extremizer(
            arg_grad[0].grid,
            arg_grad[1],
            grad_sup,
            y=arg_grad[0].source,
            t=arg_grad[0].t,
            label=f"X{arg_grad[2] + 1}",
        ),
    }
    within = (
        ratio_max <= ratio_ceiling and ratio_min >= 1.0 / ratio_ceiling and grad_sup <= gradient_ceiling
    )
    return BoundReport(
        claim="poisson",
        description="p_2t / p_t two-sided range and t |X_i p_t| / p_t",
        constants={"ratio_min": ratio_min, "ratio_max": ratio_max, "gradient": grad_sup},
        extremizers=extremizers,
        n_samples=n_samples,
        ceilings={"ratio": ratio_ceiling, "gradient": gradient_ceiling},
        tracked=["ratio_min", "ratio_max", "gradient"],
        within_ceilings=within,
        passed=within,
    )


def harnack_masks(
    snapshots: Sequence[KernelSnapshot],
    anchors: Mapping[int, DistanceField],
    samples: np.ndarray,
    floor: float = RELIABILITY_FLOOR,
) -> list[np.ndarray]:
    """One mask per (snapshot, anchor), snapshots outermost."""
    masks = []
    for snap in snapshots:
        interior = snap.grid.interior_mask(snap.source)
        base = interior[samples] & (snap.values[samples] >= floor)
        for anchor, df in anchors.items():
            usable = snap.at(anchor) >= floor and bool(interior[anchor])
            d = df.flat[samples]
            masks.append(base & np.isfinite(d) & (d > 0) & usable)
    return masks


def harnack_report(
    snapshots: Sequence[KernelSnapshot],
    anchors: Mapping[int, DistanceField],
    samples: np.ndarray,
    ceiling: float = 20.0,
    floor: float = RELIABILITY_FLOOR,
    masks: Sequence[np.ndarray] | None = None,
) -> BoundReport:
    """
    Fits p_t(x, y) <= C p_t(x', y) exp(c d(x, x') / t). Taking x = x' forces
    C >= 1 and costs nothing, so C = 1 and c is the sup over sample nodes
    x != x' of log(p_t(x, y) / p_t(x', y)) t / d(x, x'), x' ranging over the anchors.
    """
    if masks is None:
        masks = harnack_masks(snapshots, anchors, samples, floor)
    c_sup = -math.inf
    arg = None
    n_samples = 0
    pairs = [(snap, anchor, df) for snap in snapshots for anchor, df in anchors.items()]
    for (snap, anchor, df), mask in zip(pairs, masks):
        nodes = samples[mask]
        if nodes.size == 0:
            continue
        n_samples += nodes.size
        c = np.log(snap.values[nodes] / snap.at(anchor)) * snap.t / df.flat[nodes]
        k = int(np.argmax(c))
        if c[k] > c_sup:
            c_sup, arg = float(c[k]), (snap, int(nodes[k]), anchor)
    if n_samples == 0:
        raise EmptySampleError("no reliable (x, x', y, t) samples for the Harnack fit")
    snap, x, anchor = arg
    within = math.isfinite(c_sup) and c_sup <= ceiling
    return BoundReport(
        claim="harnack",
        description="Harnack-type comparison p_t(x, y) <= C p_t(x', y) exp(c d(x, x') / t)",
        constants={"C": 1.0, "c": c_sup},
        extremizers={
            "c": _extremizer(snap.grid, x, c_sup, y=snap.source, t=snap.t, label=f"anchor={_point(snap.grid, anchor)}")
        },
        n_samples=n_samples,
        ceilings={"c": ceiling},
        tracked=["c"],
        within_ceilings=within,
        passed=within,
    )


# --- functional inequalities --------------------------------------------


def function_family(grid: GridSpec, n_random: int = 10, seed: int = 0) -> list[tuple[str, np.ndarray]]:
    """
    Coordinates (sin and cos of the angle on periodic axes, so embedded
    boxes carry no seam), their pairwise products, and seeded random
    band-limited sums.
    """
    nodes = grid.nodes()
    lo, ext = np.asarray(grid.lo), grid.extent
    angles = 2 * np.pi * (nodes - lo) / ext
    if grid.core_lo is not None:
        # angle zero at the core centre
        center = (np.asarray(grid.core_lo) + np.asarray(grid.core_hi)) / 2
        angles = 2 * np.pi * (nodes - center) / ext
    coords: list[tuple[str, np.ndarray]] = []
    for j in range(grid.dim):
        if grid.periodic[j]:
            coords.append((f"sin(x{j + 1})", np.sin(angles[:, j])))
            coords.append((f"cos(x{j + 1})", np.cos(angles[:, j])))
        else:
            coords.append((f"x{j + 1}", nodes[:, j] - (lo[j] + ext[j] / 2)))
    family = list(coords)
    for (a, fa), (b, fb) in itertools.combinations(coords, 2):
        family.append((f"{a}*{b}", fa * fb))

    rng = np.random.default_rng(seed)
    modes = np.array(
        [m for m in itertools.product(range(-BAND, BAND + 1), repeat=grid.dim) if any(m)], dtype=float
    )
    phase = angles @ modes.T
    damping = 1.0 / (1.0 + np.sum(modes**2, axis=1))
    for n in range(n_random):
        a = rng.standard_normal(len(modes)) * damping
        b = rng.standard_normal(len(modes)) * damping
        family.append((f"random[{n}]", np.cos(phase) @ a + np.sin(phase) @ b))
    return family


def poincare_masks(
    dfs: Sequence[DistanceField], radii: Sequence[float], min_nodes: int = MIN_BALL_NODES
) -> list[np.ndarray]:
    """One flag per (field, radius): the ball holds `min_nodes` nodes and its rim stays interior."""
    masks = []
    for df in dfs:
        outside = ~df.grid.interior_mask(df.source)
        for r in radii:
            weights = rim_weights(df.grid, df.flat, r)
            enough = np.count_nonzero(df.flat < r) >= min_nodes
            masks.append(np.asarray(enough and not np.any((weights > 0) & outside)))
    return masks


def poincare_report(
    gen: DiscreteGenerator,
    dfs: Sequence[DistanceField],
    radii: Sequence[float],
    functions: Sequence[tuple[str, np.ndarray]],
    ceiling: float = 10.0,
    min_nodes: int = MIN_BALL_NODES,
    masks: Sequence[np.ndarray] | None = None,
) -> BoundReport:
    """
    sup over interior balls B(y, r) and f of int_B |f - f_B|^2 / (r^2 int_B |grad f|^2),
    integrals taken with rim weights.
    """
    if masks is None:
        masks = poincare_masks(dfs, radii, min_nodes)
    energies = [(label, np.asarray(f, dtype=float), gen.gradient_norm_sq(f)) for label, f in functions]
    balls = [(df, r) for df in dfs for r in radii]
    best, arg = -math.inf, None
    n_samples = n_excluded = 0
    for (df, r), keep in zip(balls, masks):
        if not keep:
            n_excluded += 1
            continue
        w = rim_weights(df.grid, df.flat, r)
        mass = float(np.sum(w))
        for label, f, energy in energies:
            mean = float(np.dot(w, f)) / mass
            num = float(np.dot(w, (f - mean) ** 2))
            den = r * r * float(np.dot(w, energy))
            if den <= 0.0 or num <= 1e-24 * max(float(np.dot(w, f**2)), 1e-300):
                n_excluded += 1
                continue
            n_samples += 1
            ratio = num / den
            if ratio > best:
                best, arg = ratio, (df, r, label)
    if n_samples == 0:
        raise EmptySampleError("no interior ball with a nonconstant test function")
    df, r, label = arg
    within = best <= ceiling
    return BoundReport(
        claim="poincare",
        description="ball-wise variance over r^2 times the ball energy",
        constants={"sup": best},
        extremizers={"sup": _extremizer(df.grid, df.source, best, r=r, label=label)},
        n_samples=n_samples,
        n_excluded=n_excluded,
        ceilings={"sup": ceiling},
        tracked=["sup"],
        within_ceilings=within,
        passed=within,
    )


def _lp_norm(values: np.ndarray, p: float, cell: float) -> float:
    return float((np.sum(np.abs(values) ** p) * cell) ** (1.0 / p))


def riesz_check(
    gen: DiscreteGenerator,
    functions: Sequence[tuple[str, np.ndarray]],
    p_list: Sequence[float] = (1.5, 4.0),
    method: str = EIGEN,
    size_limit: int = 4096,
    identity_ceiling: float = 1e-10,
    ceiling: float = 10.0,
) -> BoundReport:
    """
    |grad f|_p / |L^{1/2} f|_p over the family with constants removed. At
    p = 2 the ratio is 1 up to round-off, since L = sum D_i^T D_i.
    """
    cell = gen.grid.cell_measure
    sups = {p: (-math.inf, "") for p in p_list}
    defect, defect_label = 0.0, ""
    n_samples = n_excluded = 0
    for label, f in functions:
        f0 = np.asarray(f, dtype=float) - float(np.mean(f))
        root = sqrt_apply(gen, f0, method, tol=1e-10, size_limit=size_limit)
        grad = np.sqrt(gen.gradient_norm_sq(f0))
        if np.linalg.norm(root) <= 1e-12 * max(float(np.linalg.norm(f0)), 1e-300):
            n_excluded += 1
            continue
        n_samples += 1
        ratio2 = _lp_norm(grad, 2.0, cell) / _lp_norm(root, 2.0, cell)
        if abs(ratio2 - 1.0) > defect:
            defect, defect_label = abs(ratio2 - 1.0), label
        for p in p_list:
            ratio = _lp_norm(grad, p, cell) / _lp_norm(root, p, cell)
            if ratio > sups[p][0]:
                sups[p] = (ratio, label)
    if n_samples == 0:
        raise EmptySampleError("every Riesz test function is constant")

    constants = {"identity_defect": defect}
    extremizers = {"identity_defect": Extremizer(x=[], value=defect, label=defect_label)}
    tracked = []
    for p, (value, label) in sups.items():
        key = f"ratio_p{p:g}"
        constants[key] = value
        extremizers[key] = Extremizer(x=[], value=value, label=label)
        tracked.append(key)
    within = defect <= identity_ceiling and all(v <= ceiling for v, _ in sups.values())
    return BoundReport(
        claim="riesz",
        description="|grad f|_p / |L^{1/2} f|_p, exactly 1 at p = 2",
        constants=constants,
        extremizers=extremizers,
        n_samples=n_samples,
        n_excluded=n_excluded,
        ceilings={"identity_defect": identity_ceiling, "ratio": ceiling},
        tracked=tracked,
        within_ceilings=within,
        passed=within,
    )


# --- refinement ---------------------------------------------------------


def merge_levels(reports: Sequence[BoundReport], drift_limit: float = 0.10) -> BoundReport:
    """Constants of the finest level; stable when every tracked constant drifts below the limit."""
    if not reports:
        raise EmptySampleError("no ladder levels to merge")
    final = reports[-1].model_copy(deep=True)
    final.levels = [dict(r.constants) for r in reports]
    if len(reports) < 2:
        final.stable = None
        final.passed = final.within_ceilings
        final.notes.append("single ladder level; stability not assessed")
        return final
    previous = reports[-2]
    for key in final.tracked:
        a, b = final.constants[key], previous.constants[key]
        scale = max(abs(a), abs(b))
        final.drift[key] = abs(a - b) / scale if scale > 0 else 0.0
    final.stable = all(v < drift_limit for v in final.drift.values())
    final.passed = final.within_ceilings and final.stable
    if not final.stable:
        moved = ", ".join(k for k, v in final.drift.items() if v >= drift_limit)
        logger.warning(f"{final.claim}: constants {moved} drift by {drift_limit:.0%} or more")
    return final
