"""Upper and lower contingent cones of a closed set, decided numerically.

A direction ``u`` is tested at ``x in K`` through the quotient
``d(x + delta u, K) / delta`` along a step schedule: the lower cone needs
the quotient to vanish along the whole tail, the upper cone only along a
subsequence.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from .errors import EmptySetError, NotOnSetError
from .geometry import Point, SetRep, as_point, as_points
from .limits import (
    DEFAULT_TAIL_FRACTION,
    DEFAULT_TOLERANCE,
    HYSTERESIS,
    DeltaSchedule,
    LimitClass,
    LimitVerdict,
    QuotientTrace,
    classify_limit,
    default_schedule,
    quotient_trace,
)

MEMBERSHIP_TOL = 1e-9

_CONE_CLASS = {
    LimitClass.CONVERGES_TO_ZERO: "InLower",
    LimitClass.LIMINF_ZERO_ONLY: "InUpperOnly",
    LimitClass.BOUNDED_AWAY: "Outside",
    LimitClass.INCONCLUSIVE: "Inconclusive",
}


class ConeClass(str, Enum):
    IN_LOWER = "InLower"
    IN_UPPER_ONLY = "InUpperOnly"
    OUTSIDE = "Outside"
    INCONCLUSIVE = "Inconclusive"

    @classmethod
    def from_limit(cls, limit_class: LimitClass) -> ConeClass:
        return cls(_CONE_CLASS[limit_class])


def _check_mode(mode: str) -> str:
    if mode not in ("lower", "upper"):
        raise ValueError(f"mode must be 'lower' or 'upper', got {mode!r}")
    return mode


def accepts(verdict: LimitVerdict, mode: str) -> bool:
    """Membership rule: lower needs a vanishing limit, upper a vanishing liminf."""
    return verdict.lim_zero if _check_mode(mode) == "lower" else verdict.liminf_zero


@dataclass(frozen=True, eq=False)
class ConeVerdict:
    direction: Point
    mode: str
    mode_results: LimitVerdict
    classification: ConeClass
    trace: QuotientTrace

    @property
    def member(self) -> bool:
        return accepts(self.mode_results, self.mode)

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.tolist(),
            "mode": self.mode,
            "member": self.member,
            "classification": self.classification.value,
            "verdict": self.mode_results.to_dict(),
            "trace": self.trace.to_dict(),
        }


def cone_quotient(x, u, K: SetRep, delta: float) -> float:
    """``d(x + delta u, K) / delta``."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    x = as_point(x, K.dim)
    u = as_point(u, K.dim)
    return K.distance(x + delta * u) / delta


def _check_base(x: Point, K: SetRep) -> None:
    gap = K.distance(x)
    if gap > MEMBERSHIP_TOL:
        raise NotOnSetError(f"base point {x.tolist()} is {gap:.3g} away from the set")


def cone_membership(
    x,
    u,
    K: SetRep,
    mode: str = "lower",
    schedule: DeltaSchedule | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> ConeVerdict:
    """Decide ``u in T_K(x)`` for the lower or upper contingent cone."""
    _check_mode(mode)
    x = as_point(x, K.dim)
    u = as_point(u, K.dim)
    _check_base(x, K)
    schedule = schedule or default_schedule()
    trace = quotient_trace(
        lambda d: K.distance(x + d * u) / d, schedule, source=f"cone quotient u={u.tolist()}"
    )
    verdict = classify_limit(trace, tolerance, tail_fraction)
    return ConeVerdict(u, mode, verdict, ConeClass.from_limit(verdict.classification), trace)


# -- scans ------------------------------------------------------------------------

def angular_grid(count: int) -> tuple[np.ndarray, np.ndarray]:
    """``count`` uniformly spaced angles in degrees on [0, 360) and their unit vectors."""
    if count < 1:
        raise EmptySetError("angular grid needs at least one direction")
    angles = np.arange(count) * (360.0 / count)
    rad = np.radians(angles)
    return angles, np.stack([np.cos(rad), np.sin(rad)], axis=1)


def resolution_tolerance(step_degrees: float) -> float:
    """Largest tolerance that still separates neighbouring grid directions.

    A unit direction at angle ``theta`` from a cone ray has limiting quotient
    at least ``sin(theta)`` (for ``theta`` up to 90 degrees).  Requiring
    ``HYSTERESIS * tol <= sin(step / 2)`` makes every direction at least half a
    grid step away from the cone read as bounded away from zero.
    """
    return math.sin(math.radians(step_degrees) / 2.0) / HYSTERESIS


@dataclass(frozen=True, eq=False)
class ConeScanResult:
    base_point: Point
    directions: np.ndarray
    verdicts: tuple[ConeVerdict, ...]
    grid_resolution: float
    mode: str
    tolerance: float
    angles: np.ndarray | None = None

    @property
    def classifications(self) -> list[ConeClass]:
        return [v.classification for v in self.verdicts]

    def members(self) -> list[int]:
        """Grid indices accepted under the scan's mode."""
        return [i for i, v in enumerate(self.verdicts) if v.member]

    def labels(self) -> list[float]:
        return list(self.angles) if self.angles is not None else list(range(len(self.verdicts)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["angle_or_index", "classification", "tail_min", "tail_max"])
        for label, v in zip(self.labels(), self.verdicts):
            writer.writerow([
                format(float(label), ".17g") if self.angles is not None else int(label),
                v.classification.value,
                format(v.mode_results.tail_min, ".17g"),
                format(v.mode_results.tail_max, ".17g"),
            ])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "base_point": self.base_point.tolist(),
            "mode": self.mode,
            "tolerance": self.tolerance,
            "grid_resolution": self.grid_resolution,
            "directions": [
                {
                    "angle_or_index": float(label) if self.angles is not None else int(label),
                    "direction": v.direction.tolist(),
                    "classification": v.classification.value,
                    "member": v.member,
                    "tail_min": v.mode_results.tail_min,
                    "tail_max": v.mode_results.tail_max,
                }
                for label, v in zip(self.labels(), self.verdicts)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def cone_scan(
    x,
    K: SetRep,
    grid: int | Sequence[Sequence[float]] = 360,
    schedule: DeltaSchedule | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    mode: str = "lower",
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    resolve_grid: bool = True,
) -> ConeScanResult:
    """Classify every direction of ``grid`` independently.

    An integer ``grid`` asks for a uniform angular grid (dimension 2 only);
    otherwise ``grid`` is a list of directions, normalised to unit length.
    With ``resolve_grid`` an angular scan tightens the tolerance to
    :func:`resolution_tolerance`, so that only the grid cells actually
    containing cone directions are reported.
    """
    _check_mode(mode)
    x = as_point(x, K.dim)
    _check_base(x, K)
    angles = None
    if isinstance(grid, (int, np.integer)):
        if K.dim != 2:
            raise ValueError("angular grids are only defined in dimension 2; pass directions")
        angles, dirs = angular_grid(int(grid))
        resolution = 360.0 / int(grid)
        if resolve_grid:
            tolerance = min(tolerance, resolution_tolerance(resolution))
    else:
        dirs = as_points(grid)
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms == 0):
            raise ValueError("grid directions must be nonzero")
        dirs = dirs / norms[:, None]
        resolution = float(len(dirs))
    schedule = schedule or default_schedule()
    verdicts = parallel_map(
        lambda u: cone_membership(x, u, K, mode, schedule, tolerance, tail_fraction), list(dirs)
    )
    return ConeScanResult(x, dirs, tuple(verdicts), resolution, mode, tolerance, angles)


# -- witness sequences ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WitnessSequence:
    """Pairs ``(delta_i, s_i)`` with ``x + delta_i u + delta_i s_i`` a member of K."""

    deltas: np.ndarray
    corrections: np.ndarray
    members: np.ndarray
    residual_norms: np.ndarray
    succeeded: bool
    tolerance: float

    @property
    def entries(self) -> list[tuple[float, Point, Point]]:
        return list(zip(self.deltas.tolist(), list(self.corrections), list(self.members)))

    def as_trace(self) -> QuotientTrace:
        return QuotientTrace(tuple(zip(self.deltas.tolist(), self.residual_norms.tolist())),
                             source="witness residuals")


def witness_sequence(
    x,
    u,
    K: SetRep,
    schedule: DeltaSchedule | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> WitnessSequence:
    """Nearest members along the schedule and the corrections ``s_i`` they need.

    Success means every tail residual ``|s_i|`` is below ``tolerance``;
    otherwise the sequence is still returned with ``succeeded`` false.
    """
    x = as_point(x, K.dim)
    u = as_point(u, K.dim)
    schedule = schedule or default_schedule()
    deltas, corr, mem = [], [], []
    for d in schedule:
        target = x + d * u
        member, _ = K.nearest(target)
        deltas.append(d)
        corr.append((member - target) / d)
        mem.append(member)
    corr_arr = np.array(corr)
    norms = np.linalg.norm(corr_arr, axis=1)
    verdict = classify_limit(
        QuotientTrace(tuple(zip(deltas, norms.tolist()))), tolerance, tail_fraction
    )
    return WitnessSequence(
        np.array(deltas), corr_arr, np.array(mem), norms, verdict.lim_zero, tolerance
    )
