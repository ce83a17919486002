"""Set-valued maps: derivative sets, differentials, Lipschitz estimates and
Hausdorff-deviation sweeps.

A map ``F`` is given by an image oracle ``x -> F(x)`` (a finite cloud) and a
graph sampler producing a set representation of ``gr F`` over a window.
Derivative sets probe ``d(y + delta u, F(x + delta p)) / delta``; the
differentials are cones of the graph and are decided with
:func:`conelab.cones.cone_membership` on a :class:`GraphSet`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._parallel import parallel_map
from .cones import accepts, cone_membership
from .errors import ConelabError, DimensionError, NotOnSetError, WindowError
from .geometry import (
    FiniteCloud,
    Point,
    SampledCurve,
    SetRep,
    UnionSet,
    as_point,
    as_points,
    hausdorff_deviation,
    inclusion_with_radius,
)
from .limits import (
    DEFAULT_TAIL_FRACTION,
    DEFAULT_TOLERANCE,
    DeltaSchedule,
    LimitVerdict,
    QuotientTrace,
    classify_limit,
    default_schedule,
    quotient_trace,
)

BASE_TOL = 1e-9
DEFAULT_DENSITY = 4096
DIVERGENCE_GROWTH = 1.10

Window = tuple[tuple[float, float], ...]
Branch = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SetValuedMap:
    image: Callable[[Point], FiniteCloud]
    domain_dim: int
    codomain_dim: int
    graph_sampler: Callable[[Window, int], SetRep]
    name: str = ""

    def __call__(self, x) -> FiniteCloud:
        img = self.image(as_point(x, self.domain_dim))
        if img.dim != self.codomain_dim:
            raise DimensionError(f"image has dimension {img.dim}, expected {self.codomain_dim}")
        return img


def _branch_values(f: Branch, t: np.ndarray, codim: int) -> np.ndarray:
    return np.asarray(f(t), dtype=float).reshape(t.size, codim)


def from_branches(branches: Sequence[Branch], codomain_dim: int = 1, name: str = "") -> SetValuedMap:
    """Finite-valued map on R whose image at ``x`` is ``{f(x) for f in branches}``.

    Each branch is vectorised over a 1-D parameter array.  The graph is the
    union of the branch curves ``t -> (t, f(t))``.
    """
    branches = tuple(branches)
    if not branches:
        raise ValueError("a map needs at least one branch")

    def image(x: Point) -> FiniteCloud:
        t = np.array([x[0]])
        return FiniteCloud(np.vstack([_branch_values(f, t, codomain_dim) for f in branches]))

    def sampler(window: Window, density: int) -> SetRep:
        ((a, b),) = window
        curves = [
            SampledCurve(
                (a, b),
                lambda t, f=f: np.column_stack([t, _branch_values(f, t, codomain_dim)]),
                1 + codomain_dim,
                sample_count=density,
            )
            for f in branches
        ]
        return curves[0] if len(curves) == 1 else UnionSet(tuple(curves))

    return SetValuedMap(image, 1, codomain_dim, sampler, name)


def single_valued(f: Branch, name: str = "") -> SetValuedMap:
    return from_branches([f], name=name)


def from_image(
    image: Callable[[Point], FiniteCloud], domain_dim: int, codomain_dim: int, name: str = ""
) -> SetValuedMap:
    """Map given only by its image oracle; the graph is sampled on a grid."""

    def sampler(window: Window, density: int) -> SetRep:
        per_axis = max(2, int(round(density ** (1.0 / domain_dim))))
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in window]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain_dim)
        pts = [np.concatenate([x, y]) for x in grid for y in image(x).points]
        return FiniteCloud(np.array(pts))

    return SetValuedMap(image, domain_dim, codomain_dim, sampler, name)


def identity_map() -> SetValuedMap:
    return single_valued(lambda t: t, name="identity")


def constant_map(value: float = 0.0) -> SetValuedMap:
    return single_valued(lambda t: np.full_like(t, value), name="constant")


# -- graphs ---------------------------------------------------------------------

def _window_contains(window: Window, x: Point) -> bool:
    return all(lo <= v <= hi for (lo, hi), v in zip(window, x))


@dataclass(frozen=True, eq=False)
class GraphSet(SetRep):
    """``gr F`` restricted to ``window``, resampled locally around each query.

    For a query ``(xq, yq)`` the vertical distance ``d(yq, F(xq))`` bounds the
    distance to the graph, so the nearest graph point has domain coordinates
    within that radius of ``xq``.  The sampler is run on that neighbourhood
    and rerun on the shrunken neighbourhood while the radius keeps halving.
    """

    F: SetValuedMap
    window: Window
    density: int = DEFAULT_DENSITY
    max_rounds: int = 40

    @property
    def dim(self) -> int:
        return self.F.domain_dim + self.F.codomain_dim

    def nearest(self, q) -> tuple[Point, float]:
        q = self._check(q)
        dd = self.F.domain_dim
        xq, yq = q[:dd], q[dd:]
        if not _window_contains(self.window, xq):
            raise WindowError(f"query {xq.tolist()} lies outside the graph window {self.window}")
        ynear, best = self.F(xq).nearest(yq)
        best_pt = np.concatenate([xq, ynear])
        radius = best
        for _ in range(self.max_rounds):
            if best == 0.0:
                break
            local = tuple(
                (max(lo, v - radius), min(hi, v + radius)) for (lo, hi), v in zip(self.window, xq)
            )
            pt, d = self.F.graph_sampler(local, self.density).nearest(q)
            if d < best:
                best, best_pt = d, pt
            if best >= 0.5 * radius:
                break
            radius = best
        return best_pt, best


def default_window(x: Point, p: Point, schedule: DeltaSchedule) -> Window:
    reach = 4.0 * max(schedule.steps) * (float(np.linalg.norm(p)) or 1.0)
    return tuple((float(v) - reach, float(v) + reach) for v in x)


# -- derivative sets and differentials ------------------------------------------------

class Notion(str, Enum):
    DERIVATIVE_LOWER = "DerivativeLower"
    DERIVATIVE_UPPER = "DerivativeUpper"
    DIFFERENTIAL_LOWER = "DifferentialLower"
    DIFFERENTIAL_UPPER = "DifferentialUpper"

    @property
    def mode(self) -> str:
        return "lower" if self.value.endswith("Lower") else "upper"


@dataclass(frozen=True, eq=False)
class DerivativeVerdict:
    base: tuple[Point, Point]
    direction_in: Point
    direction_out: Point
    notion: Notion
    verdict: LimitVerdict
    member: bool
    trace: QuotientTrace

    def to_dict(self) -> dict:
        return {
            "base": [self.base[0].tolist(), self.base[1].tolist()],
            "direction_in": self.direction_in.tolist(),
            "direction_out": self.direction_out.tolist(),
            "notion": self.notion.value,
            "member": self.member,
            "verdict": self.verdict.to_dict(),
            "trace": self.trace.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _base(F: SetValuedMap, base) -> tuple[Point, Point]:
    x, y = base
    x = as_point(x, F.domain_dim)
    y = as_point(y, F.codomain_dim)
    gap = F(x).distance(y)
    if gap > BASE_TOL:
        raise NotOnSetError(f"({x.tolist()}, {y.tolist()}) is {gap:.3g} off the graph")
    return x, y


def _notion(kind: str, mode: str) -> Notion:
    if mode not in ("lower", "upper"):
        raise ValueError(f"mode must be 'lower' or 'upper', got {mode!r}")
    return Notion(f"{kind}{mode.capitalize()}")


def derivative_quotient(F: SetValuedMap, base, p, u, delta: float) -> float:
    """``d(y + delta u, F(x + delta p)) / delta``."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    x, y = _base(F, base)
    p = as_point(p, F.domain_dim)
    u = as_point(u, F.codomain_dim)
    return F(x + delta * p).distance(y + delta * u) / delta


def derivative_membership(
    F: SetValuedMap,
    base,
    p,
    u,
    mode: str = "lower",
    schedule: DeltaSchedule | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> DerivativeVerdict:
    """Decide ``u`` in the lower or upper derivative set of ``F`` at ``base`` along ``p``."""
    notion = _notion("Derivative", mode)
    x, y = _base(F, base)
    p = as_point(p, F.domain_dim)
    u = as_point(u, F.codomain_dim)
    schedule = schedule or default_schedule()
    trace = quotient_trace(
        lambda d: F(x + d * p).distance(y + d * u) / d,
        schedule,
        source=f"derivative quotient p={p.tolist()} u={u.tolist()}",
    )
    verdict = classify_limit(trace, tolerance, tail_fraction)
    return DerivativeVerdict((x, y), p, u, notion, verdict, accepts(verdict, mode), trace)


def differential_membership(
    F: SetValuedMap,
    base,
    p,
    v,
    mode: str = "lower",
    graph_window: Window | None = None,
    density: int = DEFAULT_DENSITY,
    schedule: DeltaSchedule | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> DerivativeVerdict:
    """Decide ``v`` in the lower or upper differential of ``F`` at ``base`` for ``p``.

    This is the cone test of ``(p, v)`` for the graph at ``(x, y)``.  The
    window must contain ``x + delta p`` for every scheduled step.
    """
    notion = _notion("Differential", mode)
    x, y = _base(F, base)
    p = as_point(p, F.domain_dim)
    v = as_point(v, F.codomain_dim)
    schedule = schedule or default_schedule()
    window = graph_window or default_window(x, p, schedule)
    window = tuple((float(lo), float(hi)) for lo, hi in window)
    if len(window) != F.domain_dim:
        raise DimensionError(f"window has {len(window)} axes, domain has {F.domain_dim}")
    for d in schedule:
        if not _window_contains(window, x + d * p):
            raise WindowError(
                f"graph window {window} does not contain x + delta*p for delta={d!r}"
            )
    graph = GraphSet(F, window, density)
    cv = cone_membership(
        np.concatenate([x, y]), np.concatenate([p, v]), graph, mode, schedule, tolerance,
        tail_fraction,
    )
    return DerivativeVerdict((x, y), p, v, notion, cv.mode_results, cv.member, cv.trace)


def derivative_set_scan(
    F: SetValuedMap,
    base,
    p,
    u_grid,
    mode: str = "lower",
    schedule: DeltaSchedule | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> list[DerivativeVerdict]:
    """Independent derivative-set verdicts for every ``u`` of ``u_grid``."""
    grid = as_points(u_grid)
    if grid.shape[1] != F.codomain_dim:
        raise DimensionError(f"u grid has dimension {grid.shape[1]}, expected {F.codomain_dim}")
    return parallel_map(
        lambda u: derivative_membership(F, base, p, u, mode, schedule, tolerance, tail_fraction),
        list(grid),
    )


def differential_set_scan(
    F: SetValuedMap,
    base,
    p,
    v_grid,
    mode: str = "lower",
    schedule: DeltaSchedule | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    graph_window: Window | None = None,
    density: int = DEFAULT_DENSITY,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> list[DerivativeVerdict]:
    grid = as_points(v_grid)
    return parallel_map(
        lambda v: differential_membership(
            F, base, p, v, mode, graph_window, density, schedule, tolerance, tail_fraction
        ),
        list(grid),
    )


# -- local Lipschitz estimation ----------------------------------------------------------

@dataclass(frozen=True)
class LipschitzEstimate:
    center: tuple[float, ...]
    radius: float
    estimate: float
    pair_count: int
    diverging: bool
    levels: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "radius": self.radius,
            "estimate": self.estimate,
            "pair_count": self.pair_count,
            "diverging": self.diverging,
            "levels": list(self.levels),
        }


def _ball_sample(rng: np.random.Generator, x: Point, r: float, n: int) -> np.ndarray:
    """``n`` points of the open ball ``B(x, r)``.

    In dimension 1 the points are the cell midpoints of a uniform partition
    (stratified, so successive levels resolve ever finer scales); otherwise
    they are drawn uniformly at random.
    """
    d = x.size
    if d == 1:
        return x + r * ((2 * np.arange(n) + 1 - n) / n)[:, None]
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = r * rng.random(n) ** (1.0 / d)
    return x + g * radii[:, None]


def _pairs(rng: np.random.Generator, pts: np.ndarray, max_pairs: int):
    """All index pairs, or at most ``max_pairs`` of them: every point's
    nearest-neighbour pair first, the rest drawn at random."""
    n = pts.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    if iu.size <= max_pairs:
        return iu, ju
    _, nn = cKDTree(pts).query(pts, k=2)
    near = np.unique(np.sort(np.stack([np.arange(n), nn[:, 1]], axis=1), axis=1), axis=0)
    near = near[near[:, 0] != near[:, 1]]
    flat = near[:, 0] * n + near[:, 1]
    rest = np.setdiff1d(iu * n + ju, flat, assume_unique=True)
    extra = rng.choice(rest, size=max(0, max_pairs - flat.size), replace=False)
    chosen = np.concatenate([flat, extra])[:max_pairs]
    return chosen // n, chosen % n


def _pair_ratios(points: np.ndarray, images: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Hausdorff distance of images over argument distance, for index pairs ``(i, j)``."""
    out = np.empty(i.size)
    for s in range(0, i.size, 8192):
        a, b = images[i[s : s + 8192]], images[j[s : s + 8192]]
        diff = a[:, :, None, :] - b[:, None, :, :]
        dist = np.sqrt(np.einsum("pklm,pklm->pkl", diff, diff))
        h = np.maximum(dist.min(axis=2).max(axis=1), dist.min(axis=1).max(axis=1))
        step = np.linalg.norm(points[i[s : s + 8192]] - points[j[s : s + 8192]], axis=1)
        out[s : s + 8192] = h / step
    return out


def lipschitz_estimate(
    F: SetValuedMap,
    x,
    r: float,
    refinement_levels: int = 6,
    seed: int = 0,
    max_pairs: int = 100_000,
) -> LipschitzEstimate:
    """Empirical local Lipschitz constant of ``F`` on the ball ``B(x, r)``.

    Level ``l`` samples ``2**(l + 4)`` points and takes the largest ratio
    ``h(F(y), F(z)) / |y - z|`` over all pairs, or over a randomised subset of
    ``max_pairs`` pairs (nearest neighbours always included) when there are
    more.  ``diverging`` flags estimates that grew by more
    than 10% at every level; it is evidence, not proof.
    """
    if refinement_levels < 3:
        raise ValueError("refinement_levels must be at least 3")
    if not r > 0:
        raise ValueError("radius must be positive")
    x = as_point(x, F.domain_dim)
    rng = np.random.default_rng(seed)
    levels, pairs_used = [], 0
    for level in range(refinement_levels):
        n = 2 ** (level + 4)
        pts = _ball_sample(rng, x, r, n)
        clouds = [F(pt).points for pt in pts]
        sizes = {c.shape[0] for c in clouds}
        iu, ju = _pairs(rng, pts, max_pairs)
        keep = np.any(pts[iu] != pts[ju], axis=1)
        iu, ju = iu[keep], ju[keep]
        if len(sizes) == 1:
            ratios = _pair_ratios(pts, np.stack(clouds), iu, ju)
        else:  # ragged images: pairwise one at a time
            ratios = np.array([
                max(
                    hausdorff_deviation(clouds[a], FiniteCloud(clouds[b])),
                    hausdorff_deviation(clouds[b], FiniteCloud(clouds[a])),
                ) / np.linalg.norm(pts[a] - pts[b])
                for a, b in zip(iu, ju)
            ])
        levels.append(float(ratios.max()) if ratios.size else 0.0)
        pairs_used = int(iu.size)
    diverging = all(b > DIVERGENCE_GROWTH * a for a, b in zip(levels, levels[1:]))
    return LipschitzEstimate(tuple(x.tolist()), float(r), levels[-1], pairs_used, diverging,
                             tuple(levels))


# -- Hausdorff-deviation sweeps -------------------------------------------------------------

def _as_sample(G, dim: int) -> FiniteCloud:
    cloud = G if isinstance(G, FiniteCloud) else FiniteCloud(as_points(G))
    if cloud.dim != dim:
        raise DimensionError(f"G has dimension {cloud.dim}, expected {dim}")
    return cloud


def deviation_trace(F: SetValuedMap, base, p, G, schedule: DeltaSchedule | None = None) -> QuotientTrace:
    """``h*(y + delta G, F(x + delta p)) / delta`` along the schedule."""
    x, y = _base(F, base)
    p = as_point(p, F.domain_dim)
    G = _as_sample(G, F.codomain_dim)
    schedule = schedule or default_schedule()
    return quotient_trace(
        lambda d: hausdorff_deviation(G.translated(y, d), F(x + d * p)) / d,
        schedule,
        source=f"scaled deviation p={p.tolist()} |G|={len(G)}",
    )


@dataclass(frozen=True)
class RadiusTrace:
    entries: tuple[tuple[float, float], ...]
    inclusions: tuple[bool, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([r for _, r in self.entries])

    def to_dict(self) -> dict:
        return {
            "entries": [{"delta": d, "r_of_delta": r} for d, r in self.entries],
            "inclusions": list(self.inclusions),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def radius_function(F: SetValuedMap, base, p, G, schedule: DeltaSchedule | None = None) -> RadiusTrace:
    """The smallest ``r(delta)`` with ``y + delta G`` inside ``F(x + delta p) + delta r B``.

    Each inclusion is re-verified with a ``1e-12`` relative slack for rounding.
    """
    x, y = _base(F, base)
    p = as_point(p, F.domain_dim)
    G = _as_sample(G, F.codomain_dim)
    trace = deviation_trace(F, base, p, G, schedule)
    checks = tuple(
        inclusion_with_radius(G.translated(y, d), F(x + d * p), d * r * (1 + 1e-12))
        for d, r in trace.entries
    )
    if not all(checks):
        bad = trace.entries[checks.index(False)][0]
        raise ConelabError(f"inclusion check failed at delta={bad!r}")
    return RadiusTrace(trace.entries, checks)
