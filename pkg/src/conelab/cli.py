"""Command-line front end: ``conelab <subcommand> [options]``.

Exit status is 0 on success, 1 on a computation error and 2 on a usage
error.  CSV output starts with ``#`` lines echoing every setting in force.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Callable

import numpy as np

from . import corpus, cones, svmaps
from .errors import ConelabError, ScheduleError
from .expr import ExpressionError, compile_expression
from .geometry import FiniteCloud, SetRep, format_real, interval_sample, load_cloud
from .limits import (
    DEFAULT_TAIL_FRACTION,
    DEFAULT_TOLERANCE,
    classify_limit,
    parse_schedule,
)

DEFAULT_SCHEDULE_TEXT = "geometric:0.1,0.6,48"

MAPS: dict[str, Callable[[], svmaps.SetValuedMap]] = {
    "xsin": corpus.xsin_map,
    "identity": svmaps.identity_map,
    "constant": svmaps.constant_map,
    "double": lambda: svmaps.from_branches([lambda t: t, lambda t: 2 * t], name="double"),
}
SETS: dict[str, Callable[[], SetRep]] = {"K": corpus.K_set, "Omega": corpus.Omega_set}


class UsageError(Exception):
    pass


# -- option parsers ---------------------------------------------------------------

def _vector(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _schedule(text: str):
    try:
        sch = parse_schedule(text)
    except ScheduleError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return text, sch


def _sample(text: str) -> tuple[str, FiniteCloud]:
    """``interval:a,b,n`` or points separated by ``;`` (coordinates by ``,``)."""
    try:
        if text.startswith("interval:"):
            a, b, n = text[len("interval:"):].split(",")
            return text, interval_sample(float(a), float(b), int(n))
        return text, FiniteCloud([[float(c) for c in pt.split(",")] for pt in text.split(";")])
    except (ValueError, ConelabError) as exc:
        raise argparse.ArgumentTypeError(f"bad sample {text!r}: {exc}")


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _fraction(text: str) -> float:
    try:
        f = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0 < f <= 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1], got {f}")
    return f


def _positive(text: str) -> float:
    try:
        f = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not f > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {f}")
    return f


# -- parser -----------------------------------------------------------------------

def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", type=Path, help="write here instead of stdout")


def _add_limit_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schedule", type=_schedule, default=_schedule(DEFAULT_SCHEDULE_TEXT),
                   help=f"step schedule (default {DEFAULT_SCHEDULE_TEXT})")
    p.add_argument("--schedule-scale", type=_positive, default=1.0,
                   help="multiply every step (unit scan directions: sqrt(2) turns steps "
                        "tuned for (1,1) into steps for (1,1)/|(1,1)|)")
    p.add_argument("--tolerance", type=_positive, default=DEFAULT_TOLERANCE)
    p.add_argument("--tail-fraction", type=_fraction, default=DEFAULT_TAIL_FRACTION)


def _add_set(p: argparse.ArgumentParser) -> None:
    p.add_argument("--set", required=True, dest="set_name",
                   help=f"{' | '.join(SETS)} or a CSV/JSON point-cloud file")
    p.add_argument("--point", type=_vector, required=True)


def _add_map(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--map", choices=sorted(MAPS))
    g.add_argument("--expr", help="single-valued map R -> R, e.g. 'x*sin(div(1,x,0))'")


def _add_base(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base", type=_vector, required=True, help="graph point x,y")
    p.add_argument("--p", type=_vector, required=True, help="input direction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quotient", help="trace of d(x + delta u, K) / delta")
    _add_set(q)
    q.add_argument("--dir", type=_vector, required=True)
    _add_limit_options(q)
    _add_output(q)

    c = sub.add_parser("cone-scan", help="classify a grid of directions")
    _add_set(c)
    c.add_argument("--grid", type=_positive_int, default=360, help="angular grid size")
    c.add_argument("--directions", type=_sample, help="explicit directions instead of --grid")
    c.add_argument("--mode", choices=("lower", "upper"), default="lower")
    _add_limit_options(c)
    _add_output(c)

    d = sub.add_parser("deriv-scan", help="derivative-set membership over a grid of outputs")
    _add_map(d)
    _add_base(d)
    d.add_argument("--u-grid", type=_sample, default=_sample("interval:-1.5,1.5,13"))
    d.add_argument("--mode", choices=("lower", "upper"), default="lower")
    _add_limit_options(d)
    _add_output(d)

    t = sub.add_parser("diff-test", help="differential membership of one output direction")
    _add_map(t)
    _add_base(t)
    t.add_argument("--v", type=_vector, required=True)
    t.add_argument("--mode", choices=("lower", "upper"), default="lower")
    t.add_argument("--density", type=_positive_int, default=svmaps.DEFAULT_DENSITY)
    _add_limit_options(t)
    _add_output(t)

    lp = sub.add_parser("lipschitz", help="Lipschitz-constant estimate on a ball")
    _add_map(lp)
    lp.add_argument("--x", type=_vector, required=True)
    lp.add_argument("--r", type=_positive, required=True)
    lp.add_argument("--levels", type=_positive_int, default=6)
    lp.add_argument("--seed", type=int, default=0)
    _add_output(lp)

    dv = sub.add_parser("deviation", help="trace of h*(y + delta G, F(x + delta p)) / delta")
    _add_map(dv)
    _add_base(dv)
    dv.add_argument("--G", type=_sample, required=True, dest="G")
    dv.add_argument("--radius", action="store_true", help="also verify the inclusions")
    _add_limit_options(dv)
    _add_output(dv)

    cp = sub.add_parser("corpus", help="list, show or export the example corpus")
    cp.add_argument("action", choices=("list", "show", "manifest"))
    cp.add_argument("name", nargs="?")
    cp.add_argument("--output", type=Path)

    sub.add_parser("validate", help="run every corpus claim")
    return parser


# -- helpers -----------------------------------------------------------------------

def _load_set(name: str) -> SetRep:
    if name in SETS:
        return SETS[name]()
    path = Path(name)
    if not path.is_file():
        raise UsageError(f"--set: {name!r} is neither a corpus set ({', '.join(SETS)}) nor a file")
    return load_cloud(path)


def _load_map(args) -> svmaps.SetValuedMap:
    if args.map:
        return MAPS[args.map]()
    try:
        return svmaps.single_valued(compile_expression(args.expr), name=args.expr)
    except ExpressionError as exc:
        raise UsageError(f"--expr: {exc}") from None


def _split_base(F: svmaps.SetValuedMap, coords: list[float]):
    if len(coords) != F.domain_dim + F.codomain_dim:
        raise UsageError(
            f"--base needs {F.domain_dim + F.codomain_dim} coordinates, got {len(coords)}"
        )
    return coords[: F.domain_dim], coords[F.domain_dim:]


def _steps(args):
    _, sch = args.schedule
    return sch if args.schedule_scale == 1.0 else sch.scaled(args.schedule_scale)


def _header(args, **extra) -> list[str]:
    lines = [f"# conelab {args.command}"]
    for key, value in extra.items():
        lines.append(f"# {key}: {value}")
    if hasattr(args, "schedule"):
        lines += [
            f"# schedule: {args.schedule[0]}",
            f"# schedule_scale: {format_real(args.schedule_scale)}",
            f"# tolerance: {format_real(args.tolerance)}",
            f"# tail_fraction: {format_real(args.tail_fraction)}",
        ]
    return lines


def _csv(header: list[str], body: str) -> str:
    return "\n".join(header) + "\n" + body


def _vec(v) -> str:
    return ",".join(format_real(float(c)) for c in np.ravel(v))


def _verdict_lines(verdict) -> list[str]:
    return [
        f"# classification: {verdict.classification.value}",
        f"# tail_min: {format_real(verdict.tail_min)}",
        f"# tail_max: {format_real(verdict.tail_max)}",
    ]


# -- commands ---------------------------------------------------------------------

def cmd_quotient(args) -> str:
    K = _load_set(args.set_name)
    u = np.asarray(args.dir)
    x = np.asarray(args.point)
    v = cones.cone_membership(x, u, K, "lower", _steps(args), args.tolerance,
                              args.tail_fraction)
    if args.format == "json":
        return json.dumps({"verdict": v.mode_results.to_dict(), "trace": v.trace.to_dict()})
    head = _header(args, set=args.set_name, point=_vec(x), dir=_vec(u))
    return _csv(head + _verdict_lines(v.mode_results), v.trace.to_csv())


def cmd_cone_scan(args) -> str:
    K = _load_set(args.set_name)
    grid = args.directions[1].points if args.directions else args.grid
    res = cones.cone_scan(args.point, K, grid, _steps(args), args.tolerance, args.mode,
                          args.tail_fraction)
    if args.format == "json":
        return res.to_json()
    head = _header(args, set=args.set_name, point=_vec(args.point), mode=args.mode,
                   grid=args.directions[0] if args.directions else args.grid)
    head.append(f"# effective_tolerance: {format_real(res.tolerance)}")
    return _csv(head, res.to_csv())


def cmd_deriv_scan(args) -> str:
    F = _load_map(args)
    base = _split_base(F, args.base)
    res = svmaps.derivative_set_scan(F, base, args.p, args.u_grid[1].points, args.mode,
                                     _steps(args), args.tolerance, args.tail_fraction)
    if args.format == "json":
        return json.dumps([v.to_dict() for v in res])
    head = _header(args, map=args.map or args.expr, base=_vec(args.base), p=_vec(args.p),
                   mode=args.mode, u_grid=args.u_grid[0])
    rows = ["u,member,classification,tail_min,tail_max"] + [
        f"{_vec(v.direction_out)},{str(v.member).lower()},{v.verdict.classification.value},"
        f"{format_real(v.verdict.tail_min)},{format_real(v.verdict.tail_max)}"
        for v in res
    ]
    return _csv(head, "\n".join(rows) + "\n")


def cmd_diff_test(args) -> str:
    F = _load_map(args)
    base = _split_base(F, args.base)
    v = svmaps.differential_membership(F, base, args.p, args.v, args.mode, density=args.density,
                                       schedule=_steps(args), tolerance=args.tolerance,
                                       tail_fraction=args.tail_fraction)
    if args.format == "json":
        return v.to_json()
    head = _header(args, map=args.map or args.expr, base=_vec(args.base), p=_vec(args.p),
                   v=_vec(args.v), mode=args.mode, density=args.density)
    head += [f"# member: {str(v.member).lower()}"] + _verdict_lines(v.verdict)
    return _csv(head, v.trace.to_csv())


def cmd_lipschitz(args) -> str:
    F = _load_map(args)
    est = svmaps.lipschitz_estimate(F, args.x, args.r, args.levels, args.seed)
    if args.format == "json":
        return json.dumps(est.to_dict())
    head = _header(args, map=args.map or args.expr, x=_vec(args.x), r=format_real(args.r),
                   levels=args.levels, seed=args.seed)
    head.append(f"# diverging: {str(est.diverging).lower()}")
    rows = ["level,estimate"] + [f"{i},{format_real(e)}" for i, e in enumerate(est.levels)]
    return _csv(head, "\n".join(rows) + "\n")


def cmd_deviation(args) -> str:
    F = _load_map(args)
    base = _split_base(F, args.base)
    G = args.G[1]
    trace = svmaps.deviation_trace(F, base, args.p, G, _steps(args))
    if args.radius:
        rt = svmaps.radius_function(F, base, args.p, G, _steps(args))
    verdict = classify_limit(trace, args.tolerance, args.tail_fraction)
    if args.format == "json":
        out = {"verdict": verdict.to_dict(), "trace": trace.to_dict()}
        if args.radius:
            out["radius"] = rt.to_dict()
        return json.dumps(out)
    head = _header(args, map=args.map or args.expr, base=_vec(args.base), p=_vec(args.p),
                   G=args.G[0])
    if args.radius:
        head.append("# inclusions_verified: true")
    return _csv(head + _verdict_lines(verdict), trace.to_csv())


def cmd_corpus(args) -> str:
    if args.action == "list":
        return json.dumps([
            {"name": n, "type": e["type"], "description": e["description"],
             "claims": len(e["claims"])}
            for n, e in ((n, corpus.get_entry(n).to_dict()) for n in corpus.entry_names())
        ], indent=2)
    if args.action == "manifest":
        return json.dumps(corpus.manifest(), indent=2)
    if not args.name:
        raise UsageError("corpus show needs an entry name")
    if args.name not in corpus.entry_names():
        raise UsageError(f"unknown corpus entry {args.name!r}; known: "
                         + ", ".join(corpus.entry_names()))
    return json.dumps(corpus.get_entry(args.name).to_dict(), indent=2)


def cmd_validate(args) -> tuple[str, bool]:
    start = time.perf_counter()
    results = corpus.run_claims()
    passed = sum(r.passed for r in results)
    lines = [r.line() for r in results]
    lines.append(f"# {passed}/{len(results)} claims passed in "
                 f"{time.perf_counter() - start:.2f} s")
    return "\n".join(lines) + "\n", passed == len(results)


COMMANDS = {
    "quotient": cmd_quotient,
    "cone-scan": cmd_cone_scan,
    "deriv-scan": cmd_deriv_scan,
    "diff-test": cmd_diff_test,
    "lipschitz": cmd_lipschitz,
    "deviation": cmd_deviation,
    "corpus": cmd_corpus,
}


def _emit(text: str, path: Path | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    try:
        if args.command == "validate":
            text, ok = cmd_validate(args)
            _emit(text, None)
            return 0 if ok else 1
        _emit(COMMANDS[args.command](args), getattr(args, "output", None))
        return 0
    except UsageError as exc:
        parser.error(str(exc))
    except (ConelabError, ExpressionError, ValueError, OSError) as exc:
        print(f"conelab: error: {exc}", file=sys.stderr)
        return 1
    return 0  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
