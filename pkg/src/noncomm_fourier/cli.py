"""Command-line front end.

Exit codes: 0 pass (or success), 2 fail, 3 inconclusive, 64 malformed input
file or bad usage, 1 any other named error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import fourier, lp_probe, multiplier_check, operators_zoo
from .fourier import GridFunction, MalformedRecord
from .group_backend import SU2, parse_group
from .symbols import FullSymbol, InvariantSymbol, dumps_symbol, loads_symbol

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config handling


def load_config(path: str) -> dict:
    """JSON object or flat ``key = value`` lines (``#`` comments allowed)."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise UsageError(f"config {path} is not a JSON object")
        return {k.replace("-", "_"): v for k, v in doc.items()}
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config {path} line {n}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(leaf: argparse.ArgumentParser, config: dict):
    """Install config values as defaults on ``leaf`` so explicit flags still win."""
    actions = {a.dest: a for a in leaf._actions}
    defaults = {}
    for key, value in config.items():
        if key not in actions:
            raise UsageError(f"config key {key!r} is not an option of this command")
        action = actions[key]
        if isinstance(value, str) and action.type is not None:
            value = action.type(value)
        elif isinstance(value, str) and isinstance(action, argparse._StoreTrueAction):
            value = value.lower() in ("1", "true", "yes", "on")
        elif not isinstance(value, str) and action.type is _float_list:
            value = [float(v) for v in value]
        elif not isinstance(value, str) and action.type is _limit_list:
            value = [Fraction(str(v)) for v in value]
        defaults[key] = value
    leaf.set_defaults(**defaults)


# ---------------------------------------------------------------------------
# argument types


def _limit(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a band limit: {text!r}") from exc


def _limit_list(text) -> list:
    return [_limit(t) for t in str(text).split(",") if t.strip()]


def _float_list(text) -> list:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _p(text) -> float:
    return math.inf if str(text).lower() in ("inf", "infinity") else float(text)


# ---------------------------------------------------------------------------
# I/O helpers


def _out_path(args, name: str) -> Path:
    out = Path(getattr(args, "out", None) or Path(args.out_dir) / name)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path}: not valid JSON ({exc})") from exc


def _grid_rows(grid, values: Optional[np.ndarray] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    coord = ["alpha", "beta", "gamma"] if isinstance(grid.group, SU2) else [f"x{j + 1}" for j in range(grid.group.n)]
    w.writerow(["node"] + coord + ["weight"] + ([] if values is None else ["re", "im"]))
    for i, (x, wt) in enumerate(zip(grid.nodes, grid.weights)):
        row = [i] + [repr(float(v)) for v in x] + [repr(float(wt))]
        if values is not None:
            row += [repr(float(values[i].real)), repr(float(values[i].imag))]
        w.writerow(row)
    return buf.getvalue()


def _read_values(path: str, size: int) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "re" not in rows[0]:
        raise MalformedRecord(f"{path}: expected a CSV header with 're' (and optionally 'im') columns")
    vals = []
    for n, row in enumerate(rows):
        try:
            vals.append(complex(float(row["re"]), float(row.get("im") or 0.0)))
        except (TypeError, ValueError) as exc:
            raise MalformedRecord(f"{path}: row {n + 1}: {exc}") from exc
    if len(vals) != size:
        raise MalformedRecord(f"{path}: {len(vals)} rows for a grid with {size} nodes")
    return np.array(vals)


def _load_symbol(args, margin) -> object:
    """Symbol from ``--file`` or ``--zoo``; zoo symbols are built ``margin`` labels past the cutoff."""
    if args.file:
        if not Path(args.file).exists():
            raise UsageError(f"no such file: {args.file}")
        try:
            return loads_symbol(Path(args.file).read_text())
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"{args.file}: not valid JSON ({exc})") from exc
    if not args.zoo:
        raise UsageError("give --zoo ID or --file SYMBOL.json")
    group = parse_group(args.group)
    top = max(_cutoffs(args, group))
    return operators_zoo.zoo_symbol(args.zoo, group, group.canonical_limit(top + margin))


def _cutoffs(args, group) -> list:
    if getattr(args, "cutoffs", None):
        return [group.canonical_limit(c) for c in args.cutoffs]
    if getattr(args, "cutoff", None) is not None:
        return multiplier_check._normalize_cutoffs(group, args.cutoff)
    raise UsageError("give --cutoff or --cutoffs")


# ---------------------------------------------------------------------------
# commands


def cmd_grid(args) -> int:
    group = parse_group(args.group)
    grid = group.haar_grid(args.band)
    _write(_out_path(args, "grid.csv"), _grid_rows(grid))
    return EXIT_OK


def cmd_transform(args) -> int:
    group = parse_group(args.group)
    grid = group.haar_grid(args.band)
    f = GridFunction(grid, _read_values(args.input, grid.size), args.band)
    c = fourier.forward(f, args.limit)
    _write(_out_path(args, "coefficients.json"), fourier.dumps(c))
    return EXIT_OK


def cmd_synthesize(args) -> int:
    c = fourier.coefficients_from_dict(_read_json(args.input))
    band = c.support_limit if args.band is None else c.group.canonical_limit(args.band)
    grid = c.group.haar_grid(band)
    f = fourier.inverse(c, grid)
    _write(_out_path(args, "function.csv"), _grid_rows(grid, f.values))
    return EXIT_OK


def cmd_check(args) -> int:
    kind = args.check_kind
    if args.file:
        sigma = _load_symbol(args, 0)
        group = sigma.group
    else:
        group = parse_group(args.group)
        margin = args.max_order if kind == "class" else multiplier_check.kappa(group.dim).kappa
        sigma = _load_symbol(args, margin)
    cuts = _cutoffs(args, group)
    if kind == "noninv":
        if isinstance(sigma, InvariantSymbol):
            sigma = FullSymbol.from_invariant(sigma, group.haar_grid(args.x_band))
        report = multiplier_check.check_noninvariant(sigma, args.p, cap=args.cap, cutoffs=cuts)
    else:
        if isinstance(sigma, FullSymbol):
            raise UsageError(f"check {kind} needs an invariant symbol; use check noninv")
        if kind == "hm":
            report = multiplier_check.check_hm(sigma, cap=args.cap, cutoffs=cuts)
        else:
            report = multiplier_check.check_class(sigma, args.m, args.rho, args.max_order, cap=args.cap, cutoffs=cuts)
    stem = f"check-{kind}"
    _write(Path(args.out_dir) / f"{stem}.json", report.to_json())
    _write(Path(args.out_dir) / f"{stem}.csv", report.to_csv())
    print(f"{kind}: {report.verdict} (max constant {report.max_constant()!r}, cap {report.cap!r}, "
          f"instability {report.instability:.4f}) over cutoffs {', '.join(map(str, report.cutoffs))}")
    return report.exit_code


def cmd_zoo(args) -> int:
    if args.zoo_kind == "exceptional":
        exc = operators_zoo.exceptional_set(args.axis, args.window)
        lines = [_imag_text(v) for v in exc.members]
        print("\n".join(lines))
        if args.out:
            _write(Path(args.out), json.dumps({"axis": args.axis, "window": args.window, "offset": str(exc.offset),
                                               "step": str(exc.step), "members_imag": [str(v) for v in exc.members]}))
        return EXIT_OK
    group = parse_group(args.group)
    if args.zoo_kind == "symbol":
        sigma = operators_zoo.zoo_symbol(args.op, group, args.cutoff)
    else:
        kinds = {"sublaplacian": "SubLaplacian", "heat": "Heat"}
        if args.op.lower() not in kinds:
            raise UsageError(f"parametrix available for {sorted(kinds)}, not {args.op!r}")
        sigma = operators_zoo.parametrix_symbol(kinds[args.op.lower()], args.cutoff)
    _write(_out_path(args, f"{args.op}.json"), dumps_symbol(sigma))
    return EXIT_OK


def _imag_text(v: Fraction) -> str:
    """``i q`` for a half-integer ``q`` as ``0``, ``0.5i``, ``-1.5i``."""
    return "0" if v == 0 else f"{float(v)!r}i"


def cmd_probe(args) -> int:
    if args.probe_kind == "opnorm":
        sigma = _load_symbol(argparse.Namespace(**{**vars(args), "cutoffs": args.bands, "cutoff": None}), 0)
        if isinstance(sigma, FullSymbol):
            raise UsageError("probe opnorm needs an invariant symbol")
        result = lp_probe.opnorm_lower_bound(sigma, args.p, args.bands, args.trials, args.seed)
    else:
        kind = lp_probe.SubElliptic() if args.kind == "subelliptic" else lp_probe.XPlusC(args.axis, args.c)
        result = lp_probe.apriori_ratio(kind, args.p, args.bands, args.trials, args.seed)
    stem = f"probe-{args.probe_kind}"
    _write(Path(args.out_dir) / f"{stem}.json", result.to_json())
    _write(Path(args.out_dir) / f"{stem}.csv", result.to_csv())
    _write(Path(args.out_dir) / f"{stem}.dat", result.to_gnuplot())
    sys.stdout.write(result.to_csv())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(parser):
    parser.add_argument("--out-dir", default=".", help="directory for report files")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", help="JSON or key=value file; explicit flags win")


def _symbol_source(parser):
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--zoo", help=f"zoo id: {', '.join(operators_zoo.ZOO_IDS)}")
    src.add_argument("--file", help="symbol JSON file")
    parser.add_argument("--group", default="su2", help="su2, t<n> or torus:<n> (for --zoo)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noncomm-fourier", description="Fourier analysis and symbol checks on SU(2) and tori.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("grid", help="dump a Haar quadrature grid as CSV")
    _common(p)
    p.add_argument("--group", default="su2")
    p.add_argument("--band", type=_limit, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid, _leaf=p)

    p = sub.add_parser("transform", help="grid values (CSV) to Fourier coefficients (JSON)")
    _common(p)
    p.add_argument("--group", default="su2")
    p.add_argument("--band", type=_limit, required=True)
    p.add_argument("--limit", type=_limit, help="largest label kept (default: band)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform, _leaf=p)

    p = sub.add_parser("synthesize", help="Fourier coefficients (JSON) to grid values (CSV)")
    _common(p)
    p.add_argument("--band", type=_limit, help="grid band limit (default: support limit)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synthesize, _leaf=p)

    p = sub.add_parser("check", help="multiplier and symbol-class conditions")
    checks = p.add_subparsers(dest="check_kind", required=True, parser_class=_Parser)
    for name, help_text in (("hm", "Hormander-Mikhlin conditions"), ("class", "symbol class S^m_rho"),
                            ("noninv", "x-dependent conditions")):
        c = checks.add_parser(name, help=help_text)
        _common(c)
        _symbol_source(c)
        c.add_argument("--cutoff", type=_limit)
        c.add_argument("--cutoffs", type=_limit_list)
        c.add_argument("--cap", type=float, help="default: 10x the unit-shell size of the symbol")
        if name == "class":
            c.add_argument("--m", type=float, default=0.0)
            c.add_argument("--rho", type=float, default=1.0)
            c.add_argument("--max-order", type=int, default=2)
        if name == "noninv":
            c.add_argument("--p", type=_p, default=2.0)
            c.add_argument("--x-band", type=_limit, default=Fraction(1), help="grid band for lifted zoo symbols")
        c.set_defaults(func=cmd_check, _leaf=c)

    p = sub.add_parser("zoo", help="named operators")
    zoo = p.add_subparsers(dest="zoo_kind", required=True, parser_class=_Parser)
    z = zoo.add_parser("symbol")
    _common(z)
    z.add_argument("--op", required=True)
    z.add_argument("--group", default="su2")
    z.add_argument("--cutoff", type=_limit, required=True)
    z.add_argument("--out")
    z.set_defaults(func=cmd_zoo, _leaf=z)
    z = zoo.add_parser("exceptional")
    _common(z)
    z.add_argument("--axis", type=int, default=3)
    z.add_argument("--window", type=float, required=True)
    z.add_argument("--out")
    z.set_defaults(func=cmd_zoo, _leaf=z)
    z = zoo.add_parser("parametrix")
    _common(z)
    z.add_argument("--op", default="sublaplacian")
    z.add_argument("--group", default="su2")
    z.add_argument("--cutoff", type=_limit, required=True)
    z.add_argument("--out")
    z.set_defaults(func=cmd_zoo, _leaf=z)

    p = sub.add_parser("probe", help="empirical L^p experiments")
    probes = p.add_subparsers(dest="probe_kind", required=True, parser_class=_Parser)
    for name in ("opnorm", "apriori"):
        q = probes.add_parser(name)
        _common(q)
        q.add_argument("--p", type=_p, default=2.0)
        q.add_argument("--bands", type=_limit_list, required=True)
        q.add_argument("--trials", type=int, default=8)
        if name == "opnorm":
            _symbol_source(q)
        else:
            q.add_argument("--kind", choices=("subelliptic", "xplusc"), default="subelliptic")
            q.add_argument("--axis", type=int, default=3)
            q.add_argument("--c", type=_complex, default=1.0)
        q.set_defaults(func=cmd_probe, _leaf=q)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        _apply_config(args._leaf, load_config(args.config))
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except MalformedRecord as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
