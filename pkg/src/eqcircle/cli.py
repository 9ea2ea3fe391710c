"""Command line front end.

    eqcircle shape    --family supercircle --lambda 0.5
    eqcircle spectrum --family ellipse --lambda 0 --modes 0,1,Cos
    eqcircle oracle   --family ellipse --lambda 0.1 --config solver.cfg
    eqcircle scan     --family ellipse --lambda-range -0.333:0.333:21 --modes first5 --with-oracle --out fig2.csv
    eqcircle residual --family ellipse --lambda-range 0.001:0.1:9 --modes 0,1,Cos

Exit status 0 on success, 1 on bad usage or input, 2 on a numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from .boundary import (
    BoundaryError,
    format_coefficients,
    format_samples,
    make_circle,
    make_ellipse,
    make_supercircle,
    read_samples,
    verify_constraints,
)
from .oracle import ConditioningWarning, OracleConfig, Sector, WindowTooCoarseError, classify_mode, family_levels
from .perturb import (
    DegeneracyError,
    Mode,
    UnsupportedBoundaryError,
    boundary_residual,
    energy,
    family_coefficients,
    lowest_modes,
)
from .report import detect_events, format_events, scan, write_scan
from .specfun import ConvergenceError

USAGE_ERROR = 1
NUMERIC_ERROR = 2
_VALUE_FLAGS = ("--lambda", "--lambda-range")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- argument helpers ----------------------------------------------------------


def resolve_family(spec: str):
    if spec == "ellipse":
        return make_ellipse()
    if spec == "supercircle":
        return make_supercircle()
    if spec == "circle":
        return make_circle()
    if spec.startswith("file:"):
        path = Path(spec[5:])
        if not path.is_file():
            raise UsageError(f"boundary sample file {str(path)!r} not found")
        return read_samples(path)
    raise UsageError(f"unknown family {spec!r}; use ellipse, supercircle, circle or file:<path>")


def parse_modes(text: str) -> list[Mode]:
    text = text.strip()
    if text.startswith("first"):
        try:
            count = int(text[5:])
        except ValueError:
            raise UsageError(f"bad mode alias {text!r}; expected e.g. first5") from None
        if count < 1:
            raise UsageError("firstN needs N >= 1")
        return lowest_modes(count)
    out = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        try:
            out.append(Mode.parse(part))
        except ValueError as exc:
            raise UsageError(f"bad mode {part!r}: {exc}") from None
    if not out:
        raise UsageError("no modes given")
    return out


def parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--lambda-range must be a:b:n, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--lambda-range must be a:b:n, got {text!r}") from None
    if n < 1:
        raise UsageError("--lambda-range needs n >= 1")
    return np.linspace(a, b, n)


def _coerce(name: str, raw: str, default):
    raw = raw.strip()
    if name == "k_window":
        lo, hi = (float(v) for v in raw.replace(",", ":").split(":"))
        return (lo, hi)
    if name == "symmetry_sector":
        return Sector(raw)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    return type(default)(raw)


def load_config(path: str | None) -> OracleConfig:
    """OracleConfig from a plain ``key = value`` file; ``#`` starts a comment."""
    base = OracleConfig()
    if path is None:
        return base
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {path!r} not found")
    names = {f.name: f for f in dataclasses.fields(OracleConfig)}
    updates = {}
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in names:
            raise UsageError(f"{path}:{lineno}: unknown setting {key!r}; known: {', '.join(names)}")
        try:
            updates[key] = _coerce(key, raw, getattr(base, key))
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    try:
        return dataclasses.replace(base, **updates)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _grid(args, default=None) -> np.ndarray:
    if args.lambda_ is not None and args.lambda_range is not None:
        raise UsageError("give either --lambda or --lambda-range, not both")
    if args.lambda_range is not None:
        return parse_range(args.lambda_range)
    if args.lambda_ is not None:
        try:
            return np.array([float(args.lambda_)])
        except ValueError:
            raise UsageError(f"--lambda expects a number, got {args.lambda_!r}") from None
    if default is None:
        raise UsageError("this command needs --lambda or --lambda-range")
    return np.asarray(default, dtype=float)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --- subcommands ---------------------------------------------------------------


def cmd_shape(args) -> int:
    family = resolve_family(args.family)
    lams = _grid(args, default=[0.0])
    for lam in lams:
        family.check_lambda(lam)
    fb = family_coefficients(family)
    report = verify_constraints(fb)
    samples = format_samples(family, lams)
    coeffs = format_coefficients(fb)
    checks = "\n".join(report.lines()) + "\n"
    if args.out is None:
        sys.stdout.write("# boundary samples\n" + samples)
        sys.stdout.write("# fourier coefficients, R0 = %.15g\n" % fb.R0 + coeffs)
        sys.stdout.write("# area constraints\n" + checks)
    else:
        Path(args.out).write_text(samples)
        Path(args.out + ".coeffs").write_text(coeffs)
        sys.stdout.write(checks)
    return 0


def cmd_spectrum(args) -> int:
    family = resolve_family(args.family)
    modes = parse_modes(args.modes or "first5")
    config = load_config(args.config)
    result = scan(family, _grid(args), modes, with_oracle=args.with_oracle, config=config)
    _emit(result.to_csv(), args.out)
    return 0


def cmd_oracle(args) -> int:
    family = resolve_family(args.family)
    config = load_config(args.config)
    lams = _grid(args, default=[0.0])
    lines = ["lambda,k,energy,sector,quality,matched_mode"]
    for lam in lams:
        levels = family_levels(family, lam, config)
        # reference energies for labelling: every circle mode up to a little above the window
        top = config.k_window[1] * 1.3
        ref_modes = [m for m in lowest_modes(200) if m.rho <= top]
        ref = {m: energy(m, family, lam) for m in ref_modes}
        for lv in levels:
            m = classify_mode(lv, ref, config.refine_tol)
            lines.append(
                f"{lam:.15g},{lv.k:.15g},{lv.energy:.15g},{lv.sector.value},{lv.quality:.3e},{m.l}:{m.j}:{m.parity.value}"
            )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_scan(args) -> int:
    family = resolve_family(args.family)
    modes = parse_modes(args.modes or "first5")
    config = load_config(args.config)
    grid = _grid(args)
    result = scan(family, grid, modes, with_oracle=args.with_oracle, config=config)
    events = detect_events(result) if len(result.grid) >= 3 else None
    if args.out is None:
        sys.stdout.write(result.to_csv())
        if events is not None:
            sys.stdout.write("\n" + format_events(events))
    else:
        write_scan(result, args.out, events)
    return 0


def cmd_residual(args) -> int:
    family = resolve_family(args.family)
    modes = parse_modes(args.modes or "0,1,Cos")
    if args.lambda_range is not None:
        parts = args.lambda_range.split(":")
        if len(parts) != 3:
            raise UsageError(f"--lambda-range must be a:b:n, got {args.lambda_range!r}")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if not (0 < a < b) or n < 2:
            raise UsageError("residual study needs 0 < a < b and n >= 2 (points are log-spaced)")
        lams = np.geomspace(a, b, n)
    else:
        lams = np.geomspace(1e-3, 1e-1, 9)
    rows = ["l,j,parity,order,lambda,residual"]
    slopes = ["l,j,parity,order,slope"]
    for m in modes:
        orders = (0, 1, 2) if m.l == 0 else (0, 1)
        for order in orders:
            res = np.array([boundary_residual(m, family, lam, order) for lam in lams])
            for lam, v in zip(lams, res):
                rows.append(f"{m.l},{m.j},{m.parity.value},{order},{lam:.15g},{v:.15g}")
            slope = np.polyfit(np.log(lams), np.log(np.maximum(res, 1e-300)), 1)[0]
            slopes.append(f"{m.l},{m.j},{m.parity.value},{order},{slope:.4f}")
    _emit("\n".join(rows) + "\n\n" + "\n".join(slopes) + "\n", args.out)
    return 0


COMMANDS = {
    "shape": (cmd_shape, "boundary samples, Fourier coefficient table and area-constraint report"),
    "spectrum": (cmd_spectrum, "perturbative energies for given modes and lambda values"),
    "oracle": (cmd_oracle, "numerical Dirichlet levels"),
    "scan": (cmd_scan, "deformation sweep with crossing / veering report"),
    "residual": (cmd_residual, "boundary-residual decay with lambda"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--family", default="ellipse", help="ellipse | supercircle | circle | file:<path>")
    common.add_argument("--lambda", dest="lambda_", metavar="LAM", help="single deformation value")
    common.add_argument("--lambda-range", metavar="A:B:N", help="N evenly spaced values from A to B")
    common.add_argument("--modes", help="'l,j,Cos;l,j,Sin;...' or first5")
    common.add_argument("--with-oracle", action="store_true", help="also solve numerically")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--config", help="key = value file overriding solver settings")
    common.add_argument("--seed", type=int, default=0, help="reserved; the pipeline is deterministic")
    parser = _Parser(prog="eqcircle", description="Equivalent-circle perturbation theory for Dirichlet drums.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def _join_values(argv: Sequence[str]) -> list[str]:
    # "--lambda-range -0.3:0.3:7" would otherwise be read as an unknown option
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_values(argv))
        if args.command is None:
            raise UsageError("missing command; choose one of " + ", ".join(COMMANDS))
        with warnings.catch_warnings():
            # always true for high-order bases; the singular-value sweep copes with it
            warnings.simplefilter("ignore", ConditioningWarning)
            return COMMANDS[args.command][0](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (UnsupportedBoundaryError, DegeneracyError, ConvergenceError, WindowTooCoarseError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    except (BoundaryError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
