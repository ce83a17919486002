"""Ready-made example objects with executable ground truth.

Three entries are provided:

``K``      the set ``{(1/n, 1/n)} U {(0, 0)}``;
``Omega``  the set ``{(1/(2n)!, 1/(2n)!)} U {(0, 0)}``;
``xsin``   the single-valued map ``x sin(1/x)`` (``0`` at ``x = 0``).

Every entry carries a list of :class:`Claim` objects.  A claim names the
operation that checks it (``kind``), JSON-serialisable parameters, and the
expected outcome, so the whole list can be exported as a manifest and
replayed by :func:`run_claim`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import cones, svmaps
from .geometry import SequenceSet, SetRep, interval_sample
from .limits import LimitClass, classify_limit, parse_schedule
from .svmaps import SetValuedMap

SQRT2 = math.sqrt(2.0)
OMEGA_TERMS = 8
DEFAULT_SCHEDULE = "geometric:0.1,0.6,48"
FACTORIAL_SCHEDULE = "family:even_factorial,7+family:odd_factorial,7"
U_GRID = [-1.5 + 0.25 * k for k in range(13)]


@dataclass(frozen=True)
class Claim:
    id: str
    kind: str
    statement: str
    params: dict
    expected: Any


@dataclass(frozen=True, eq=False)
class CorpusEntry:
    name: str
    object: SetRep | SetValuedMap
    description: str
    claims: tuple[Claim, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "type": "set" if isinstance(self.object, SetRep) else "map",
            "description": self.description,
            "claims": [asdict(c) for c in self.claims],
        }


@dataclass(frozen=True)
class ClaimResult:
    entry: str
    claim: Claim
    passed: bool
    observed: Any
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.entry}/{self.claim.id}: {self.claim.statement}" + (
            f" -- {self.detail}" if self.detail and not self.passed else ""
        )


# -- objects ----------------------------------------------------------------------

def K_set() -> SequenceSet:
    return SequenceSet(
        term=lambda n: (1.0 / n, 1.0 / n),
        limit=(0.0, 0.0),
        tail_bound=lambda N: SQRT2 / (N + 1),
        ray=(1.0, 1.0),
    )


def Omega_set() -> SequenceSet:
    # 1/16! is the last term kept; smaller ones only enter through tail_bound
    return SequenceSet(
        term=lambda n: (1.0 / math.factorial(2 * n),) * 2,
        limit=(0.0, 0.0),
        tail_bound=lambda N: SQRT2 / math.factorial(2 * N + 2),
        max_index=OMEGA_TERMS,
        ray=(1.0, 1.0),
    )


def xsin(t):
    t = np.asarray(t, dtype=float)
    zero = t == 0
    return np.where(zero, 0.0, t * np.sin(1.0 / np.where(zero, 1.0, t)))


def xsin_map() -> SetValuedMap:
    return svmaps.single_valued(xsin, name="xsin")


def _sine_preimage_schedule(levels, count: int = 24) -> str:
    return "+".join(f"family:sine_preimage,{count},{lv!r}" for lv in levels)


# -- entries -----------------------------------------------------------------------------

def corpus_K() -> CorpusEntry:
    claims = (
        Claim("lower-diagonal", "cone_membership", "(1,1) in T^L_K(0,0)",
              {"x": [0, 0], "u": [1, 1], "mode": "lower", "schedule": DEFAULT_SCHEDULE},
              {"classification": "InLower", "member": True}),
        Claim("upper-diagonal", "cone_membership", "(1,1) in T^U_K(0,0)",
              {"x": [0, 0], "u": [1, 1], "mode": "upper", "schedule": DEFAULT_SCHEDULE},
              {"member": True}),
        Claim("horizontal-outside", "cone_membership", "(1,0) not in T^U_K(0,0)",
              {"x": [0, 0], "u": [1, 0], "mode": "upper", "schedule": DEFAULT_SCHEDULE},
              {"classification": "Outside", "member": False}),
        Claim("zero-direction", "cone_membership", "(0,0) in T^L_K(0,0)",
              {"x": [0, 0], "u": [0, 0], "mode": "lower", "schedule": DEFAULT_SCHEDULE},
              {"classification": "InLower", "member": True}),
        Claim("cone-scan", "cone_scan",
              "T^L_K(0,0) = T^U_K(0,0) = {(a,a): a >= 0}",
              {"x": [0, 0], "grid": 360, "schedule": DEFAULT_SCHEDULE},
              {"lower_members": [45.0], "upper_members": [45.0], "others": "Outside"}),
        Claim("witness-diagonal", "witness", "x_i = delta_i (1,1) + delta_i s_i in K with s_i -> 0",
              {"x": [0, 0], "u": [1, 1], "schedule": "family:reciprocal,48"},
              {"succeeded": True, "max_residual": 0.0}),
        Claim("witness-horizontal", "witness", "no witness sequence for (1,0)",
              {"x": [0, 0], "u": [1, 0], "schedule": DEFAULT_SCHEDULE},
              {"succeeded": False}),
        Claim("term-4", "term", "term(4) = (1/4, 1/4)", {"n": 4}, [0.25, 0.25]),
    )
    return CorpusEntry("K", K_set(), "{(1/n, 1/n): n >= 1} U {(0,0)} in R^2", claims)


def corpus_Omega() -> CorpusEntry:
    odd = [1.0 / math.factorial(2 * k + 1) for k in range(1, 8)]
    even = [1.0 / math.factorial(2 * k) for k in range(1, 8)]
    claims = (
        Claim("odd-factorial-quotients", "cone_quotient_values",
              "(1/d) d(d(1,1), Omega) = sqrt(2) (1 - 1/(2k+2)) at d = 1/(2k+1)!",
              {"x": [0, 0], "u": [1, 1], "deltas": odd, "rel_tol": 1e-9},
              [SQRT2 * (1 - 1 / (2 * k + 2)) for k in range(1, 8)]),
        Claim("even-factorial-quotients", "cone_quotient_values",
              "(1/d) d(d(1,1), Omega) = 0 at d = 1/(2k)!",
              {"x": [0, 0], "u": [1, 1], "deltas": even, "abs_tol": 1e-12},
              [0.0] * 7),
        Claim("lower-diagonal", "cone_membership", "(1,1) not in T^L_Omega(0,0)",
              {"x": [0, 0], "u": [1, 1], "mode": "lower", "schedule": FACTORIAL_SCHEDULE},
              {"classification": "InUpperOnly", "limit": "LiminfZeroOnly", "member": False}),
        Claim("upper-diagonal", "cone_membership", "(1,1) in T^U_Omega(0,0)",
              {"x": [0, 0], "u": [1, 1], "mode": "upper", "schedule": FACTORIAL_SCHEDULE},
              {"classification": "InUpperOnly", "member": True}),
        Claim("cone-scan", "cone_scan",
              "T^L_Omega(0,0) = {(0,0)}, T^U_Omega(0,0) = {(a,a): a >= 0}",
              {"x": [0, 0], "grid": 360, "schedule": FACTORIAL_SCHEDULE,
               "schedule_scale": SQRT2},
              {"lower_members": [], "upper_members": [45.0], "others": "Outside"}),
        Claim("term-1", "term", "term(1) = (1/2, 1/2)", {"n": 1}, [0.5, 0.5]),
    )
    return CorpusEntry("Omega", Omega_set(), "{(1/(2n)!, 1/(2n)!): n >= 1} U {(0,0)} in R^2",
                       claims)


def corpus_xsin() -> CorpusEntry:
    levels = [u for u in U_GRID if abs(u) <= 1]
    claims = (
        Claim("image", "image", "F(2/pi) = {2/pi}", {"x": [2 / math.pi]}, [[2 / math.pi]]),
        Claim("not-lipschitz", "lipschitz", "F is not locally Lipschitz at 0",
              {"x": [0.0], "r": 0.1, "levels": 6}, {"diverging": True}),
        Claim("derivative-quotient", "derivative_quotient_values",
              "(1/d) d(0, F(d)) = |sin(1/d)|",
              {"base": [[0], [0]], "p": [1], "u": [0], "schedule": "geometric:0.1,0.6,20",
               "rel_tol": 1e-9},
              "abs_sin"),
        Claim("lower-derivative", "derivative_membership", "0 not in lower derivative set along 1",
              {"base": [[0], [0]], "p": [1], "u": [0], "mode": "lower",
               "schedule": DEFAULT_SCHEDULE},
              {"member": False}),
        Claim("upper-derivative-zero", "derivative_membership", "0 in upper derivative set along 1",
              {"base": [[0], [0]], "p": [1], "u": [0], "mode": "upper",
               "schedule": "family:pi_reciprocal,48"},
              {"member": True}),
        Claim("lower-differential", "differential_membership", "0 in D^L F(0,0)|(1)",
              {"base": [[0], [0]], "p": [1], "v": [0], "mode": "lower",
               "schedule": DEFAULT_SCHEDULE},
              {"member": True}),
        Claim("lower-differential-bound", "differential_membership",
              "(1/d_i) d((d_i,0), gr F) <= pi/i for d_i in (1/(pi(i+1)), 1/(pi i)]",
              {"base": [[0], [0]], "p": [1], "v": [0], "mode": "lower",
               "schedule": "family:pi_midpoint,48", "bound": "pi_over_index"},
              {"member": True, "limit": "ConvergesToZero"}),
        Claim("upper-derivative-set", "derivative_set_scan",
              "upper derivative set along 1 = [-1, 1]",
              {"base": [[0], [0]], "p": [1], "u_grid": U_GRID, "mode": "upper",
               "schedule": _sine_preimage_schedule(levels)},
              {"members": levels}),
        Claim("deviation-interval", "deviation_bound",
              "(1/d) h*(d[-1,1], F(d)) >= 1/2",
              {"base": [[0], [0]], "p": [1], "G": "interval:-1,1,41",
               "schedule": DEFAULT_SCHEDULE, "lower_bound": 0.5, "abs_tol": 1e-9},
              {"all_at_least": 0.5}),
        Claim("radius-interval", "radius_function",
              "r(d) >= 1/2 does not vanish for G = [-1,1]",
              {"base": [[0], [0]], "p": [1], "G": "interval:-1,1,41",
               "schedule": DEFAULT_SCHEDULE, "lower_bound": 0.5},
              {"inclusions": True, "all_at_least": 0.5}),
        Claim("deviation-singleton", "deviation_values",
              "(1/d) h*({0}, F(d)) = |sin(1/d)| and has no limit",
              {"base": [[0], [0]], "p": [1], "G": [[0.0]], "schedule": DEFAULT_SCHEDULE,
               "rel_tol": 1e-9},
              {"values": "abs_sin", "not": "ConvergesToZero"}),
    )
    return CorpusEntry("xsin", xsin_map(), "F(x) = x sin(1/x), F(0) = 0, on R", claims)


BUILDERS: dict[str, Callable[[], CorpusEntry]] = {
    "K": corpus_K,
    "Omega": corpus_Omega,
    "xsin": corpus_xsin,
}


@lru_cache(maxsize=None)
def get_entry(name: str) -> CorpusEntry:
    try:
        return BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown corpus entry {name!r}; known: {', '.join(BUILDERS)}") from None


def entry_names() -> list[str]:
    return list(BUILDERS)


def manifest() -> list[dict]:
    """Every claim of every entry, JSON-ready."""
    return [
        {"entry": name, **asdict(claim)}
        for name in entry_names()
        for claim in get_entry(name).claims
    ]


# -- claim runner ---------------------------------------------------------------------------

def parse_sample(spec) -> Any:
    """``interval:a,b,n`` or a literal list of points."""
    if isinstance(spec, str):
        head, _, body = spec.partition(":")
        if head != "interval":
            raise ValueError(f"unknown sample specification {spec!r}")
        a, b, n = body.split(",")
        return interval_sample(float(a), float(b), int(n))
    return np.asarray(spec, dtype=float)


def _schedule(params: dict):
    sch = parse_schedule(params["schedule"])
    if "schedule_scale" in params:
        sch = sch.scaled(params["schedule_scale"])
    return sch


def _close(a, b, rel: float = 0.0, abs_: float = 0.0) -> bool:
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b))
                       <= np.maximum(abs_, rel * np.abs(np.asarray(b)))))


def _base(params: dict):
    x, y = params["base"]
    return np.asarray(x, float), np.asarray(y, float)


def _run(entry: CorpusEntry, c: Claim) -> tuple[bool, Any, str]:
    obj, p, exp = entry.object, c.params, c.expected
    kind = c.kind
    if kind == "term":
        got = obj.point(p["n"]).tolist()
        return got == exp, got, ""
    if kind == "cone_membership":
        v = cones.cone_membership(p["x"], p["u"], obj, p["mode"], _schedule(p))
        got = {"classification": v.classification.value, "member": v.member,
               "limit": v.mode_results.classification.value}
        return all(got[k] == exp[k] for k in exp), got, ""
    if kind == "cone_scan":
        res = cones.cone_scan(p["x"], obj, p["grid"], _schedule(p), mode="lower")
        angles = [float(a) for a in res.angles]
        lower = [a for a, v in zip(angles, res.verdicts) if cones.accepts(v.mode_results, "lower")]
        upper = [a for a, v in zip(angles, res.verdicts) if cones.accepts(v.mode_results, "upper")]
        flagged = set(lower) | set(upper)
        others = {v.classification.value for a, v in zip(angles, res.verdicts) if a not in flagged}
        got = {"lower_members": lower, "upper_members": upper, "others": sorted(others)}
        ok = lower == exp["lower_members"] and upper == exp["upper_members"] \
            and others <= {exp["others"]}
        return ok, got, ""
    if kind == "witness":
        w = cones.witness_sequence(p["x"], p["u"], obj, _schedule(p))
        got = {"succeeded": w.succeeded, "max_residual": float(w.residual_norms.max())}
        ok = got["succeeded"] == exp["succeeded"]
        if "max_residual" in exp:
            ok = ok and got["max_residual"] <= exp["max_residual"]
        return ok, got, ""
    if kind == "cone_quotient_values":
        got = [cones.cone_quotient(p["x"], p["u"], obj, d) for d in p["deltas"]]
        ok = _close(got, exp, p.get("rel_tol", 0.0), p.get("abs_tol", 0.0))
        return ok, got, ""
    if kind == "image":
        got = obj(p["x"]).points.tolist()
        return _close(got, exp, abs_=1e-15), got, ""
    if kind == "lipschitz":
        est = svmaps.lipschitz_estimate(obj, p["x"], p["r"], p["levels"])
        return est.diverging == exp["diverging"], est.to_dict(), ""
    if kind == "derivative_quotient_values":
        sch = _schedule(p)
        got = [svmaps.derivative_quotient(obj, _base(p), p["p"], p["u"], d) for d in sch]
        want = [abs(math.sin(1.0 / d)) for d in sch]
        return _close(got, want, rel=p["rel_tol"]), got, ""
    if kind == "derivative_membership":
        v = svmaps.derivative_membership(obj, _base(p), p["p"], p["u"], p["mode"], _schedule(p))
        return v.member == exp["member"], {"member": v.member,
                                           "limit": v.verdict.classification.value}, ""
    if kind == "differential_membership":
        sch = _schedule(p)
        v = svmaps.differential_membership(obj, _base(p), p["p"], p["v"], p["mode"], schedule=sch)
        got = {"member": v.member, "limit": v.verdict.classification.value}
        ok = all(got[k] == exp[k] for k in exp)
        if p.get("bound") == "pi_over_index":
            idx = np.arange(1, len(v.trace) + 1)
            within = bool(np.all(v.trace.values <= math.pi / idx))
            got["within_bound"] = within
            ok = ok and within
        return ok, got, ""
    if kind == "derivative_set_scan":
        res = svmaps.derivative_set_scan(obj, _base(p), p["p"], p["u_grid"], p["mode"],
                                         _schedule(p))
        got = [float(v.direction_out[0]) for v in res if v.member]
        return got == exp["members"], got, ""
    if kind == "deviation_bound":
        tr = svmaps.deviation_trace(obj, _base(p), p["p"], parse_sample(p["G"]), _schedule(p))
        low = float(tr.values.min())
        return low >= p["lower_bound"] - p["abs_tol"], {"min": low}, ""
    if kind == "radius_function":
        rt = svmaps.radius_function(obj, _base(p), p["p"], parse_sample(p["G"]), _schedule(p))
        low = float(rt.values.min())
        ok = all(rt.inclusions) and low >= p["lower_bound"]
        return ok, {"min": low, "inclusions": all(rt.inclusions)}, ""
    if kind == "deviation_values":
        tr = svmaps.deviation_trace(obj, _base(p), p["p"], parse_sample(p["G"]), _schedule(p))
        want = np.abs(np.sin(1.0 / tr.deltas))
        verdict = classify_limit(tr)
        ok = _close(tr.values, want, rel=p["rel_tol"]) \
            and verdict.classification is not LimitClass(exp["not"])
        return ok, {"limit": verdict.classification.value}, ""
    raise ValueError(f"unknown claim kind {kind!r}")


def run_claim(entry: CorpusEntry, claim: Claim) -> ClaimResult:
    try:
        ok, observed, detail = _run(entry, claim)
    except Exception as exc:  # a crashing claim is a failing claim
        return ClaimResult(entry.name, claim, False, None, f"{type(exc).__name__}: {exc}")
    return ClaimResult(entry.name, claim, bool(ok), observed,
                       detail or ("" if ok else f"observed {observed!r}"))


def run_claims(names: list[str] | None = None) -> list[ClaimResult]:
    return [
        run_claim(get_entry(name), claim)
        for name in (names or entry_names())
        for claim in get_entry(name).claims
    ]
