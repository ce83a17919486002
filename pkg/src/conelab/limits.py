"""Step schedules and classification of (1/delta)-scaled quantities.

A finite schedule can never establish a limit; :func:`classify_limit`
returns a verdict together with the tail statistics it was based on.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Iterable, Union

import numpy as np

from .errors import ScheduleError

DEFAULT_TOLERANCE = 5e-2
DEFAULT_TAIL_FRACTION = 0.5
MIN_SCHEDULE_LENGTH = 8
MIN_TAIL_LENGTH = 4
HYSTERESIS = 4.0


# -- schedule descriptions --------------------------------------------------

@dataclass(frozen=True)
class Geometric:
    start: float
    ratio: float
    count: int


@dataclass(frozen=True)
class Explicit:
    steps: tuple[float, ...]


@dataclass(frozen=True)
class HarmonicFamily:
    """Named step families indexed by ``n = first, ..., first + count - 1``.

    ``param`` is only read by ``sine_preimage``.
    """

    formula: str
    count: int
    first: int = 1
    param: float | None = None


ScheduleKind = Union[Geometric, Explicit, HarmonicFamily]


def _factorial_reciprocal(m: int) -> float:
    if m > 170:
        raise ScheduleError(f"1/{m}! underflows double precision")
    return 1.0 / math.factorial(m)


def _sine_preimage(k: int, level: float | None) -> float:
    if level is None or not -1.0 <= level <= 1.0:
        raise ScheduleError("sine_preimage needs a level in [-1, 1]")
    return 1.0 / (2.0 * math.pi * k + math.asin(level))


FAMILIES: dict[str, Callable[[int, float | None], float]] = {
    "reciprocal": lambda n, _: 1.0 / n,
    "odd_factorial": lambda k, _: _factorial_reciprocal(2 * k + 1),
    "even_factorial": lambda n, _: _factorial_reciprocal(2 * n),
    "pi_reciprocal": lambda i, _: 1.0 / (math.pi * i),
    # midpoint of (1/(pi (i+1)), 1/(pi i)]: the farthest step from both zeros of sin(1/delta)
    "pi_midpoint": lambda i, _: (2 * i + 1) / (2.0 * math.pi * i * (i + 1)),
    # steps with sin(1/delta) == level
    "sine_preimage": _sine_preimage,
}


@dataclass(frozen=True)
class DeltaSchedule:
    steps: tuple[float, ...]
    kind: ScheduleKind

    def __post_init__(self):
        steps = tuple(float(s) for s in self.steps)
        if not steps:
            raise ScheduleError("empty schedule")
        if not all(math.isfinite(s) and s > 0 for s in steps):
            raise ScheduleError("schedule steps must be finite and positive")
        if any(b >= a for a, b in zip(steps, steps[1:])):
            raise ScheduleError("schedule steps must be strictly decreasing")
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def scaled(self, factor: float) -> DeltaSchedule:
        """Every step multiplied by ``factor`` (the rescaled schedule of the cone identity)."""
        if not factor > 0:
            raise ScheduleError("scale factor must be positive")
        return DeltaSchedule(tuple(factor * s for s in self.steps), Explicit(()))

    def as_array(self) -> np.ndarray:
        return np.array(self.steps)


def _validate_count(count: int, min_count: int) -> None:
    if count < min_count:
        raise ScheduleError(f"schedule needs at least {min_count} steps, got {count}")


def make_schedule(kind: ScheduleKind, min_count: int = MIN_SCHEDULE_LENGTH) -> DeltaSchedule:
    """Build the deterministic schedule described by ``kind``."""
    if isinstance(kind, Geometric):
        if not kind.start > 0:
            raise ScheduleError(f"start must be positive, got {kind.start}")
        if not 0 < kind.ratio < 1:
            raise ScheduleError(f"ratio must lie in (0, 1), got {kind.ratio}")
        _validate_count(kind.count, min_count)
        steps = tuple(kind.start * kind.ratio**k for k in range(kind.count))
    elif isinstance(kind, HarmonicFamily):
        try:
            fn = FAMILIES[kind.formula]
        except KeyError:
            raise ScheduleError(
                f"unknown family {kind.formula!r}; known: {', '.join(sorted(FAMILIES))}"
            ) from None
        if kind.first < 1:
            raise ScheduleError("family indices start at 1")
        _validate_count(kind.count, min_count)
        steps = tuple(fn(n, kind.param) for n in range(kind.first, kind.first + kind.count))
    elif isinstance(kind, Explicit):
        _validate_count(len(kind.steps), min_count)
        steps = tuple(kind.steps)
    else:
        raise TypeError(f"not a schedule description: {kind!r}")
    return DeltaSchedule(steps, kind)


def interleave(*schedules: DeltaSchedule) -> DeltaSchedule:
    """Merge schedules into one strictly decreasing schedule (duplicates dropped)."""
    if not schedules:
        raise ScheduleError("nothing to interleave")
    merged = sorted({s for sch in schedules for s in sch.steps}, reverse=True)
    return DeltaSchedule(tuple(merged), Explicit(tuple(merged)))


def default_schedule() -> DeltaSchedule:
    return make_schedule(Geometric(1e-1, 0.6, 48))


def factorial_schedule(kmax: int) -> DeltaSchedule:
    """Steps ``1/(2k)!`` and ``1/(2k+1)!`` for ``k = 1..kmax``, merged."""
    return interleave(
        make_schedule(HarmonicFamily("even_factorial", kmax), min_count=1),
        make_schedule(HarmonicFamily("odd_factorial", kmax), min_count=1),
    )


def parse_schedule(text: str) -> DeltaSchedule:
    """Parse the colon syntax; ``+`` joins several pieces into one interleaved schedule.

    ``geometric:start,ratio,count`` | ``family:name,count[,param]`` |
    ``explicit:d1,d2,...``
    """
    pieces = [p.strip() for p in text.split("+") if p.strip()]
    if not pieces:
        raise ScheduleError("empty schedule specification")
    built = [_parse_piece(p, min_count=1 if len(pieces) > 1 else MIN_SCHEDULE_LENGTH)
             for p in pieces]
    if len(built) == 1:
        return built[0]
    merged = interleave(*built)
    _validate_count(len(merged), MIN_SCHEDULE_LENGTH)
    return merged


def _parse_piece(text: str, min_count: int) -> DeltaSchedule:
    head, sep, body = text.partition(":")
    if not sep:
        raise ScheduleError(f"schedule piece {text!r} lacks a 'kind:' prefix")
    args = [a.strip() for a in body.split(",") if a.strip()]
    try:
        if head == "geometric":
            if len(args) != 3:
                raise ScheduleError("geometric takes start,ratio,count")
            return make_schedule(Geometric(float(args[0]), float(args[1]), int(args[2])), min_count)
        if head == "family":
            if len(args) not in (2, 3):
                raise ScheduleError("family takes name,count[,param]")
            param = float(args[2]) if len(args) == 3 else None
            return make_schedule(HarmonicFamily(args[0], int(args[1]), param=param), min_count)
        if head == "explicit":
            return make_schedule(Explicit(tuple(float(a) for a in args)), min_count)
    except ValueError as exc:
        if isinstance(exc, ScheduleError):
            raise
        raise ScheduleError(f"bad number in schedule piece {text!r}: {exc}") from None
    raise ScheduleError(f"unknown schedule kind {head!r}")


# -- traces -------------------------------------------------------------------

@dataclass(frozen=True)
class QuotientTrace:
    entries: tuple[tuple[float, float], ...]
    source: str = ""

    def __post_init__(self):
        entries = tuple((float(d), float(v)) for d, v in self.entries)
        if any(b[0] >= a[0] for a, b in zip(entries, entries[1:])):
            raise ScheduleError("trace deltas must be strictly decreasing")
        for d, v in entries:
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"trace value {v!r} at delta={d!r} is not finite and nonnegative")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for d, _ in self.entries])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.entries])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["delta", "value"])
        for d, v in self.entries:
            writer.writerow([format(d, ".17g"), format(v, ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, source: str = "") -> QuotientTrace:
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if not rows or rows[0] != ["delta", "value"]:
            raise ValueError("trace CSV must start with the header 'delta,value'")
        return cls(tuple((float(d), float(v)) for d, v in rows[1:]), source)

    def to_dict(self) -> dict:
        return {"source": self.source, "entries": [[d, v] for d, v in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def quotient_trace(
    q: Callable[[float], float], schedule: DeltaSchedule | Iterable[float], source: str = ""
) -> QuotientTrace:
    """Evaluate ``q`` at every scheduled step, in order, without filtering."""
    entries = []
    for delta in schedule:
        value = float(q(delta))
        if not math.isfinite(value):
            raise ValueError(f"quantity {source or 'q'} is not finite at delta={delta!r}")
        if value < 0:
            raise ValueError(f"quantity {source or 'q'} is negative at delta={delta!r}")
        entries.append((delta, value))
    return QuotientTrace(tuple(entries), source)


# -- classification -------------------------------------------------------------

class LimitClass(str, Enum):
    CONVERGES_TO_ZERO = "ConvergesToZero"
    LIMINF_ZERO_ONLY = "LiminfZeroOnly"
    BOUNDED_AWAY = "BoundedAwayFromZero"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class LimitVerdict:
    classification: LimitClass
    tail_min: float
    tail_max: float
    tail_fraction: float
    tolerance: float
    tail_length: int = field(default=0)

    @property
    def liminf_zero(self) -> bool:
        """Evidence for ``liminf = 0`` (the upper-mode acceptance rule)."""
        return self.classification in (LimitClass.CONVERGES_TO_ZERO, LimitClass.LIMINF_ZERO_ONLY)

    @property
    def lim_zero(self) -> bool:
        """Evidence for ``lim = 0`` (the lower-mode acceptance rule)."""
        return self.classification is LimitClass.CONVERGES_TO_ZERO

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classification"] = self.classification.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def tail_length(n: int, tail_fraction: float) -> int:
    return math.ceil(tail_fraction * n)


def classify_limit(
    trace: QuotientTrace,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> LimitVerdict:
    """Classify the tail of ``trace``.

    With ``m``/``M`` the tail min/max and ``t`` the tolerance:
    ``M < t`` converges to zero; ``m < t <= M`` with ``M >= 4t`` has only a
    vanishing liminf; ``m >= 4t`` is bounded away from zero; anything else
    sits in the hysteresis band and is inconclusive.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    if len(trace) == 0:
        raise ScheduleError("empty trace")
    n_tail = tail_length(len(trace), tail_fraction)
    if n_tail < MIN_TAIL_LENGTH:
        raise ScheduleError(
            f"tail of {n_tail} entries is shorter than {MIN_TAIL_LENGTH}; lengthen the schedule"
        )
    tail = trace.values[-n_tail:]
    m, M = float(tail.min()), float(tail.max())
    if M < tolerance:
        cls = LimitClass.CONVERGES_TO_ZERO
    elif m < tolerance and M >= HYSTERESIS * tolerance:
        cls = LimitClass.LIMINF_ZERO_ONLY
    elif m >= HYSTERESIS * tolerance:
        cls = LimitClass.BOUNDED_AWAY
    else:
        cls = LimitClass.INCONCLUSIVE
    return LimitVerdict(cls, m, M, tail_fraction, tolerance, n_tail)
