"""Points, closed sets behind distance oracles, and Hausdorff metrics.

Every set representation answers ``distance(y)`` (the infimum of the
Euclidean distance from ``y`` to the set) and ``nearest(y)`` (a member
attaining it).  Three concrete representations are provided:

* :class:`FiniteCloud`  -- exact, vectorised over the points.
* :class:`SequenceSet`  -- ``{term(n): n >= 1} U {limit}`` searched by
  branch and bound over index blocks, certified by ``tail_bound``.
* :class:`SampledCurve` -- a one-parameter set, dense scan followed by
  golden-section refinement.

:class:`UnionSet` glues representations together (graphs of maps with
several branches).
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CertificationError, DimensionError, EmptySetError

Point = np.ndarray

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_CHUNK = 4096


def as_point(coords, dim: int | None = None) -> Point:
    """Coerce ``coords`` to a 1-D float array with finite entries."""
    arr = np.atleast_1d(np.asarray(coords, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"a point needs a nonempty flat coordinate list, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point has non-finite coordinates: {arr.tolist()}")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"point has dimension {arr.size}, expected {dim}")
    return arr


def as_points(points) -> np.ndarray:
    """Coerce to an ``(n, d)`` float array; 1-D input is read as n points in dim 1."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a list of points, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptySetError("empty point list")
    if arr.shape[1] == 0:
        raise DimensionError("points of dimension 0")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point list has non-finite coordinates")
    return arr


class SetRep:
    """Closed set in R^dim presented through a distance oracle."""

    dim: int

    def distance(self, y) -> float:
        return self.nearest(y)[1]

    def nearest(self, y) -> tuple[Point, float]:
        raise NotImplementedError

    def _check(self, y) -> Point:
        return as_point(y, self.dim)


@dataclass(frozen=True, eq=False)
class FiniteCloud(SetRep):
    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def nearest(self, y) -> tuple[Point, float]:
        y = self._check(y)
        d = np.linalg.norm(self.points - y, axis=1)
        i = int(np.argmin(d))  # first index on ties
        return self.points[i].copy(), float(d[i])

    def distances(self, ys) -> np.ndarray:
        """Vectorised ``distance`` for an ``(m, dim)`` array of queries."""
        ys = as_points(ys)
        if ys.shape[1] != self.dim:
            raise DimensionError(f"query dimension {ys.shape[1]} != set dimension {self.dim}")
        out = np.empty(ys.shape[0])
        for s in range(0, ys.shape[0], _CHUNK):
            block = ys[s : s + _CHUNK]
            diff = block[:, None, :] - self.points[None, :, :]
            out[s : s + _CHUNK] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1)
        return out

    def translated(self, offset, scale: float = 1.0) -> FiniteCloud:
        """The cloud ``offset + scale * points``."""
        return FiniteCloud(as_point(offset, self.dim) + scale * self.points)


@dataclass(frozen=True, eq=False)
class SequenceSet(SetRep):
    """The countable closed set ``{term(n) : n >= 1} U {limit}``.

    ``tail_bound(N)`` must bound ``|term(n) - limit|`` for every ``n > N``
    (``N = 0`` included) and decrease to zero.  When ``ray`` is given the
    terms are promised to lie on ``limit + t * ray`` with ``t`` nonincreasing
    in ``n``; the search then encloses index blocks by segments and runs in
    logarithmic time.  Without it, blocks are enclosed by balls around the
    limit, which is only efficient for queries away from the limit.

    ``max_index`` caps materialised terms; the remainder is covered by
    ``tail_bound(max_index)`` alone.
    """

    term: Callable[[int], Sequence[float]]
    limit: np.ndarray
    tail_bound: Callable[[int], float]
    max_index: int | None = None
    ray: np.ndarray | None = None
    rtol: float = 1e-12
    atol: float = 0.0
    max_evaluations: int = 200_000

    def __post_init__(self):
        lim = as_point(self.limit)
        object.__setattr__(self, "limit", lim)
        if self.ray is not None:
            ray = as_point(self.ray, lim.size)
            norm = np.linalg.norm(ray)
            if norm == 0.0:
                raise ValueError("ray direction must be nonzero")
            object.__setattr__(self, "ray", ray / norm)
        if self.max_index is not None and self.max_index < 1:
            raise EmptySetError("max_index must be at least 1")
        object.__setattr__(self, "_limit_t", tuple(lim.tolist()))
        object.__setattr__(
            self, "_ray_t", None if self.ray is None else tuple(self.ray.tolist())
        )

    @property
    def dim(self) -> int:
        return self.limit.size

    def point(self, n: int) -> Point:
        if n < 1 or (self.max_index is not None and n > self.max_index):
            raise IndexError(f"term {n} is not materialised")
        return as_point(self.term(n), self.dim)

    def prefix_cloud(self, n: int) -> FiniteCloud:
        """Finite sample: the first ``n`` materialised terms and the limit."""
        if self.max_index is not None:
            n = min(n, self.max_index)
        pts = [self.point(k) for k in range(1, n + 1)]
        pts.append(self.limit)
        return FiniteCloud(np.array(pts))

    def nearest(self, y) -> tuple[Point, float]:
        point, dist, _ = self._search(self._check(y))
        return point, dist

    def nearest_index(self, y) -> int | None:
        """Index of the nearest term, or ``None`` if the limit is nearest."""
        return self._search(self._check(y))[2]

    # The search runs on plain float tuples: numpy call overhead dominates
    # for the short vectors involved.
    def _term(self, pts: dict, n: int) -> tuple[tuple[float, ...], float]:
        """Term ``n`` and its distance to the limit, memoised in ``pts``."""
        hit = pts.get(n)
        if hit is None:
            p = tuple(float(v) for v in self.term(n))
            if len(p) != self.dim or not all(map(math.isfinite, p)):
                raise ValueError(f"term {n} is not a finite point of dimension {self.dim}")
            hit = pts[n] = (p, math.dist(p, self._limit_t))
        return hit

    def _block_bound(self, geo: tuple, pts: dict, lo: int, hi: int | None) -> float:
        """Lower bound on the distance from the query to the terms ``lo..hi``.

        ``geo`` is ``(|rel|, a, perp)``: the query's offset norm from the
        limit, its coordinate along the ray and its distance to the ray's line.
        """
        norm, a, perp = geo
        if self.ray is None:
            return max(0.0, norm - self.tail_bound(lo - 1))
        if self.max_index is None or lo <= self.max_index:
            r_out = self._term(pts, lo)[1]
        else:
            r_out = self.tail_bound(lo - 1)
        r_in = self._term(pts, hi)[1] if hi is not None else 0.0
        return math.hypot(perp, a - min(max(a, r_in), r_out))

    def _search(self, y: Point) -> tuple[Point, float, int | None]:
        yt = tuple(float(v) for v in y)
        lim = self._limit_t
        rel = tuple(a - b for a, b in zip(yt, lim))
        norm = math.hypot(*rel)
        a = perp = 0.0
        if self._ray_t is not None:
            a = sum(r * w for r, w in zip(rel, self._ray_t))
            perp = math.hypot(*(r - a * w for r, w in zip(rel, self._ray_t)))
        geo = (norm, a, perp)
        pts: dict = {}
        if self._ray_t is not None:
            return self._search_ray(yt, geo, pts)
        best_d, best_n, best_p = norm, math.inf, lim

        counter = 0
        heap = [(self._block_bound(geo, pts, 1, None), counter, 1, None)]
        while heap:
            bound, _, lo, hi = heapq.heappop(heap)
            if bound >= best_d - max(self.atol, self.rtol * best_d):
                break
            if len(pts) > self.max_evaluations:
                raise CertificationError(
                    f"distance search exceeded {self.max_evaluations} term evaluations"
                )
            if hi is None and self.max_index is not None and lo > self.max_index:
                continue  # beyond materialised terms: only tail_bound speaks for it
            probes = (lo,) if hi is None or hi == lo else (lo, hi)
            for n in probes:
                p = self._term(pts, n)[0]
                d = math.dist(yt, p)
                if d < best_d or (d == best_d and n < best_n):
                    best_d, best_n, best_p = d, n, p
            children: list[tuple[int, int | None]] = []
            if hi is None:
                end = 2 * lo - 1
                if self.max_index is not None:
                    end = min(end, self.max_index)
                children += [(lo + 1, end), (end + 1, None)]
            elif hi - lo >= 2:
                mid = (lo + hi) // 2
                children += [(lo + 1, mid), (mid + 1, hi - 1)]
            for c_lo, c_hi in children:
                if c_hi is not None and c_lo > c_hi:
                    continue
                counter += 1
                heapq.heappush(heap, (self._block_bound(geo, pts, c_lo, c_hi), counter, c_lo, c_hi))
        index = None if math.isinf(best_n) else int(best_n)
        return np.array(best_p, dtype=float), best_d, index

    def _search_ray(self, yt: tuple, geo: tuple, pts: dict) -> tuple[Point, float, int | None]:
        """Terms sit on the ray at nonincreasing radii, so only the two terms
        whose radii bracket the query's projection can be nearest."""
        _, a, _ = geo
        last = self.max_index
        hi = None  # first index with radius <= a, found by galloping then bisection
        if a > 0:
            n = 1
            while self._term(pts, n)[1] > a:
                if last is not None and n >= last:
                    break
                if n > 1 << 1100:
                    raise CertificationError("term radii do not reach the query projection")
                n = n * 2 if last is None else min(n * 2, last)
            else:
                lo = n // 2 + 1 if n > 1 else 1
                hi = n
                while lo < hi:
                    mid = (lo + hi) // 2
                    if self._term(pts, mid)[1] <= a:
                        hi = mid
                    else:
                        lo = mid + 1
        if hi is None:
            # a <= 0 leaves the limit nearest; otherwise every kept radius exceeds a
            cand = [last] if last is not None and a > 0 else []
        else:
            cand = [hi - 1, hi] if hi > 1 else [hi]
        best_d, best_n, best_p = math.dist(yt, self._limit_t), None, self._limit_t
        for n in sorted(cand, reverse=True):
            p = self._term(pts, n)[0]
            d = math.dist(yt, p)
            if d <= best_d:
                best_d, best_n, best_p = d, n, p
        return np.array(best_p, dtype=float), best_d, best_n


@dataclass(frozen=True, eq=False)
class SampledCurve(SetRep):
    """Image of ``parameter_window`` under a vectorised ``eval``.

    ``eval`` maps a 1-D array of parameters to an ``(n, dim)`` array.
    Distances are the minimum over ``sample_count`` uniform samples,
    improved by golden-section search on the two brackets around the best
    sample.
    """

    parameter_window: tuple[float, float]
    eval: Callable[[np.ndarray], np.ndarray]
    dim: int
    sample_count: int = 4096
    refine_iterations: int = 60

    def __post_init__(self):
        a, b = (float(v) for v in self.parameter_window)
        if not (math.isfinite(a) and math.isfinite(b)) or a > b:
            raise ValueError(f"bad parameter window {self.parameter_window}")
        if self.sample_count < 1 or self.refine_iterations < 1:
            raise ValueError("sample_count and refine_iterations must be positive")
        object.__setattr__(self, "parameter_window", (a, b))

    def _points(self, t: np.ndarray) -> np.ndarray:
        pts = np.asarray(self.eval(t), dtype=float).reshape(t.size, self.dim)
        if not np.all(np.isfinite(pts)):
            bad = t[~np.all(np.isfinite(pts), axis=1)][0]
            raise ValueError(f"curve evaluation is not finite at parameter {bad!r}")
        return pts

    def sample_cloud(self) -> FiniteCloud:
        a, b = self.parameter_window
        return FiniteCloud(self._points(np.linspace(a, b, self.sample_count)))

    def nearest(self, y) -> tuple[Point, float]:
        y = self._check(y)
        a, b = self.parameter_window
        n = self.sample_count if b > a else 1
        t = np.linspace(a, b, n)
        pts = self._points(t)
        d2 = np.einsum("ij,ij->i", pts - y, pts - y)
        i = int(np.argmin(d2))
        best_t, best_d2 = t[i], d2[i]
        if n > 1:
            lo = np.array([t[max(i - 1, 0)], t[i]])
            hi = np.array([t[i], t[min(i + 1, n - 1)]])
            rt, rd2 = self._golden(y, lo, hi)
            j = int(np.argmin(rd2))
            if rd2[j] < best_d2:
                best_t, best_d2 = rt[j], rd2[j]
        p = self._points(np.array([best_t]))[0]
        return p, float(np.sqrt(best_d2))

    def _golden(self, y: Point, lo: np.ndarray, hi: np.ndarray):
        def f(t):
            q = self._points(t) - y
            return np.einsum("ij,ij->i", q, q)

        c = hi - _INVPHI * (hi - lo)
        d = lo + _INVPHI * (hi - lo)
        fc, fd = f(c), f(d)
        for _ in range(self.refine_iterations):
            left = fc < fd
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            new_c = hi - _INVPHI * (hi - lo)
            new_d = lo + _INVPHI * (hi - lo)
            c_next = np.where(left, new_c, d)
            d_next = np.where(left, c, new_d)
            probe = np.where(left, c_next, d_next)
            fp = f(probe)
            fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
            c, d = c_next, d_next
        t = np.concatenate([c, d, lo, hi])
        vals = f(t)
        k = vals.reshape(4, -1).argmin(axis=0)
        cols = np.arange(lo.size)
        return t.reshape(4, -1)[k, cols], vals.reshape(4, -1)[k, cols]


@dataclass(frozen=True, eq=False)
class UnionSet(SetRep):
    parts: tuple[SetRep, ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise EmptySetError("union of no sets")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise DimensionError(f"union parts have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def nearest(self, y) -> tuple[Point, float]:
        y = self._check(y)
        return min((p.nearest(y) for p in self.parts), key=lambda r: r[1])


@dataclass(frozen=True)
class UnitBall:
    """Closed ball of ``radius`` centred at the origin of R^dimension."""

    dimension: int
    radius: float = 1.0

    def __post_init__(self):
        if self.dimension < 1:
            raise DimensionError("ball dimension must be positive")
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def contains(self, v) -> bool:
        return float(np.linalg.norm(as_point(v, self.dimension))) <= self.radius


def interval_sample(a: float, b: float, n: int) -> FiniteCloud:
    """Uniform ``n``-point sample of the segment ``[a, b]`` in R."""
    if n < 1:
        raise EmptySetError("interval sample needs at least one point")
    if n == 1 and a != b:
        raise ValueError("a one-point sample only represents a degenerate interval")
    return FiniteCloud(np.linspace(a, b, n).reshape(-1, 1))


def _finite_points(E) -> np.ndarray:
    if isinstance(E, FiniteCloud):
        return E.points
    if isinstance(E, SetRep):
        raise TypeError(
            f"{type(E).__name__} is not a finite sample; use prefix_cloud()/sample_cloud()"
        )
    return as_points(E)


def distance(y, K: SetRep) -> float:
    """Euclidean distance from ``y`` to ``K``."""
    return K.distance(y)


def hausdorff_deviation(E, D: SetRep) -> float:
    """``sup_{e in E} d(e, D)`` for a finite sample ``E``."""
    pts = _finite_points(E)
    if pts.shape[1] != D.dim:
        raise DimensionError(f"sample dimension {pts.shape[1]} != set dimension {D.dim}")
    if isinstance(D, FiniteCloud):
        return float(D.distances(pts).max())
    return max(D.distance(p) for p in pts)


def hausdorff_distance(A, B) -> float:
    """Symmetric Hausdorff distance between two finite samples."""
    A = A if isinstance(A, FiniteCloud) else FiniteCloud(_finite_points(A))
    B = B if isinstance(B, FiniteCloud) else FiniteCloud(_finite_points(B))
    return max(hausdorff_deviation(A, B), hausdorff_deviation(B, A))


def inclusion_with_radius(E, D: SetRep, r: float) -> bool:
    """Whether ``E`` lies in the closed inflation ``D + r B``."""
    if r < 0:
        raise ValueError("inflation radius must be nonnegative")
    return hausdorff_deviation(E, D) <= r


# -- finite cloud I/O -------------------------------------------------------

def format_real(x: float) -> str:
    return format(float(x), ".17g")


def cloud_to_csv(cloud: FiniteCloud) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in cloud.points:
        writer.writerow([format_real(v) for v in row])
    return buf.getvalue()


def _floats(row: list[str]) -> list[float] | None:
    try:
        return [float(v) for v in row]
    except ValueError:
        return None


def cloud_from_csv(text: str) -> FiniteCloud:
    """One point per row; ``#`` lines and a leading non-numeric header are skipped."""
    raw = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if raw and _floats(raw[0]) is None:
        raw = raw[1:]
    rows = []
    for r in raw:
        vals = _floats(r)
        if vals is None:
            raise ValueError(f"non-numeric CSV row {r!r}")
        rows.append(vals)
    if not rows:
        raise EmptySetError("CSV holds no points")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DimensionError(f"CSV rows have differing column counts {sorted(widths)}")
    return FiniteCloud(np.array(rows))


def cloud_to_json(cloud: FiniteCloud) -> str:
    return json.dumps(cloud.points.tolist())


def cloud_from_json(text: str) -> FiniteCloud:
    data = json.loads(text)
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise ValueError("JSON cloud must be an array of arrays")
    if not data:
        raise EmptySetError("JSON holds no points")
    widths = {len(r) for r in data}
    if len(widths) != 1:
        raise DimensionError(f"JSON rows have differing lengths {sorted(widths)}")
    return FiniteCloud(np.array(data, dtype=float))


def load_cloud(path: str | Path) -> FiniteCloud:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return cloud_from_json(text)
    return cloud_from_csv(text)


def save_cloud(cloud: FiniteCloud, path: str | Path) -> None:
    path = Path(path)
    text = cloud_to_json(cloud) if path.suffix.lower() == ".json" else cloud_to_csv(cloud)
    path.write_text(text)
