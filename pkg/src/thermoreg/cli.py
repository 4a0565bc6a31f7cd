"""``thermoreg`` command-line interface.

Exit codes: 0 success, 1 failed check, 2 usage or config error, 3 domain error, 4 runtime
divergence, 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Callable, Sequence

from . import __version__
from . import gaussian as gm
from . import thermo
from . import vonmises as vm
from .checks import SUITES, run_suite
from .errors import ConvergenceError, DivergenceError, DomainError, NonFiniteError, ThermoregError
from .experiments import emit_report, load_config, run_experiment
from .geometry import Coords
from .trajectory import kl_divergence

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_DIVERGENCE = 4
EXIT_IO = 5


class UsageError(Exception):
    """Bad command-line input detected after argparse (exit 2)."""


def _num(x: float) -> str:
    # repr-free fixed precision; str.format ignores the locale
    return f"{x:.12g}"


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"expected two comma-separated numbers, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"cannot parse coordinates {text!r}") from None


def _belief(manifold: str, text: str, coords: str | None):
    values = _pair(text)
    if manifold == "gaussian":
        chart = Coords.parse(coords or "mu-tau")
        if chart is Coords.DIR_KAPPA:
            raise UsageError("chart dir-kappa does not apply to gaussian beliefs")
        return gm.GaussianBelief.from_coords(values, chart)
    if coords not in (None, "dir-kappa"):
        raise UsageError("von Mises beliefs use the dir-kappa chart")
    return vm.VonMisesBelief(*values)


def _emit(args: argparse.Namespace, payload: dict[str, Any], lines: Sequence[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in lines:
            print(line)


def cmd_distance(args: argparse.Namespace) -> int:
    a = _belief(args.manifold, args.a, args.coords)
    b = _belief(args.manifold, args.b, args.coords)
    d = gm.fisher_rao_distance(a, b) if args.manifold == "gaussian" else vm.vm_fisher_rao_distance(a, b)
    _emit(args, {"distance": d, "distance_sq": d * d}, [f"distance {_num(d)}", f"distance_sq {_num(d * d)}"])
    return EXIT_OK


def cmd_geodesic(args: argparse.Namespace) -> int:
    a = _belief(args.manifold, args.a, args.coords)
    b = _belief(args.manifold, args.b, args.coords)
    path = gm.geodesic(a, b, args.points) if args.manifold == "gaussian" else vm.vm_geodesic(a, b)
    if args.manifold == "gaussian":
        chart = Coords.parse(args.coords or "mu-tau")
        names = ("mu", "tau") if chart is Coords.MU_TAU else ("mu", "sigma")
    else:
        chart, names = Coords.DIR_KAPPA, ("mu_dir", "kappa")
    rows = [p.coords(chart) for p in path]
    _emit(
        args,
        {"coords": list(names), "points": [list(r) for r in rows]},
        [f"{names[0]},{names[1]}"] + [f"{_num(r[0])},{_num(r[1])}" for r in rows],
    )
    return EXIT_OK


def cmd_kl(args: argparse.Namespace) -> int:
    a = _belief(args.manifold, args.a, args.coords)
    b = _belief(args.manifold, args.b, args.coords)
    k = kl_divergence(a, b)
    bits = thermo.nats_to_bits(k)
    _emit(args, {"kl_nats": k, "kl_bits": bits}, [f"kl_nats {_num(k)}", f"kl_bits {_num(bits)}"])
    return EXIT_OK


def cmd_landauer(args: argparse.Namespace) -> int:
    env = thermo.Environment(args.temperature)
    bound = thermo.landauer_bound_per_bit(env)
    payload = {"temperature_kelvin": args.temperature, "joules_per_bit": bound}
    lines = [f"joules_per_bit {_num(bound)}"]
    if args.kl_nats is not None:
        e = thermo.min_regularization_energy(args.kl_nats, env)
        payload["min_energy_joules"] = e
        lines.append(f"min_energy_joules {_num(e)}")
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_efficiency(args: argparse.Namespace) -> int:
    rep = thermo.efficiency(args.bits, args.joules, thermo.Environment(args.temperature))
    payload = {
        "eta": rep.eta,
        "landauer_joules": rep.landauer_joules,
        "actual_joules": rep.actual_joules,
        "inefficiency": rep.inefficiency,
    }
    _emit(args, payload, [f"eta {_num(rep.eta)}", f"landauer_joules {_num(rep.landauer_joules)}", f"inefficiency {_num(rep.inefficiency)}"])
    return EXIT_OK


def cmd_crystallize(args: argparse.Namespace) -> int:
    thresholds = _pair(args.thresholds) if args.thresholds else thermo.DEFAULT_THRESHOLDS
    c = thermo.crystallization_index(args.tau, args.kappa, thresholds)
    _emit(args, {"index": c.value, "regime": c.regime.value}, [f"index {_num(c.value)}", f"regime {c.regime.value}"])
    return EXIT_OK


def _overrides(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"tolerance override must be NAME=VALUE, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"tolerance {key!r} is not a number: {value!r}") from None
    return out


def cmd_check(args: argparse.Namespace) -> int:
    try:
        results = run_suite(args.suite, _overrides(args.tol))
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    ok = all(r.passed for r in results)
    payload = {
        "passed": ok,
        "results": [
            {"suite": r.suite, "name": r.name, "passed": r.passed, "measured": r.measured, "tolerance": r.tolerance, "detail": r.detail}
            for r in results
        ],
    }
    lines = [
        f"{'PASS' if r.passed else 'FAIL'}  [{r.suite}] {r.name}: measured {r.measured:.3e} (tol {r.tolerance:.1e})"
        + (f"  {r.detail}" if r.detail else "")
        for r in results
    ]
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    _emit(args, payload, lines)
    return EXIT_OK if ok else 1


def cmd_experiment(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except DomainError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    report = run_experiment(cfg, args.workers)
    out_dir = args.output_dir or cfg.output_dir
    emit_report(report, out_dir)
    if cfg.prediction == 1:
        result = {"prediction1_pass": report.prediction1_pass}
        line = f"prediction1_pass {str(report.prediction1_pass).lower()}"
    else:
        result = {"prediction2_trend": report.prediction2_trend}
        line = f"prediction2_trend {_num(report.prediction2_trend)}"
    payload = {**result, "records": len(report.records), "output_dir": str(out_dir)}
    _emit(args, payload, [f"{line}  ({len(report.records)} runs -> {out_dir})"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    points = argparse.ArgumentParser(add_help=False)
    points.add_argument("--manifold", choices=("gaussian", "vonmises"), required=True)
    points.add_argument("--a", required=True, metavar="X,Y", help="first point in --coords")
    points.add_argument("--b", required=True, metavar="X,Y", help="second point in --coords")
    points.add_argument("--coords", choices=[c.value for c in Coords], help="chart of --a/--b (default mu-tau or dir-kappa)")

    parser = argparse.ArgumentParser(prog="thermoreg", description="Fisher-Rao belief geometry and Landauer accounting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("distance", parents=[common, points], help="Fisher-Rao distance")
    p.set_defaults(func=cmd_distance)
    p = sub.add_parser("geodesic", parents=[common, points], help="sample a geodesic")
    p.add_argument("--points", type=int, default=64, help="samples for Gaussian geodesics")
    p.set_defaults(func=cmd_geodesic)
    p = sub.add_parser("kl", parents=[common, points], help="KL(a || b) in nats and bits")
    p.set_defaults(func=cmd_kl)

    p = sub.add_parser("landauer", parents=[common], help="Landauer bound per bit")
    p.add_argument("--temperature", type=float, default=300.0, help="kelvin")
    p.add_argument("--kl-nats", type=float, help="also price this much KL")
    p.set_defaults(func=cmd_landauer)

    p = sub.add_parser("efficiency", parents=[common], help="Landauer efficiency of a measured energy")
    p.add_argument("--bits", type=float, required=True, help="information erased")
    p.add_argument("--joules", type=float, required=True, help="energy actually spent")
    p.add_argument("--temperature", type=float, default=300.0)
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("crystallize", parents=[common], help="crystallization index tau*kappa")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--thresholds", metavar="LO,HI", help="regime thresholds (default 0.1,10)")
    p.set_defaults(func=cmd_crystallize)

    p = sub.add_parser("check", parents=[common], help="run invariant suites")
    p.add_argument("suite", choices=(*SUITES, "all"))
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("experiment", parents=[common], help="run a prediction experiment from a JSON config")
    p.add_argument("config", help="path to the JSON config")
    p.add_argument("--workers", type=int, help="process count (default: config value)")
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.set_defaults(func=cmd_experiment)
    return parser


_EXIT_FOR: tuple[tuple[type, int], ...] = (
    (DomainError, EXIT_DOMAIN),
    (DivergenceError, EXIT_DIVERGENCE),
    (ConvergenceError, EXIT_DIVERGENCE),
    (NonFiniteError, EXIT_DIVERGENCE),
    (ThermoregError, EXIT_DOMAIN),
    (OSError, EXIT_IO),
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"thermoreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        for kind, code in _EXIT_FOR:
            if isinstance(exc, kind):
                print(f"thermoreg: error: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
