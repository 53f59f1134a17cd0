"""Command-line front end: bounds, extremal states, engine sweeps and oscillator saturation.

Exit codes: 0 success, 2 usage error, 3 numerical-domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BETA_INF, DiagonalState, DomainError, Spectrum, energy, gibbs_state
from .engine import evaluate_engine
from .ergotropy import (
    beta_star,
    bound_single_system,
    bound_with_bath,
    ergotropy,
    extraction_bound,
    passive_state,
)
from .oscillator import frequency_for_shift, saturation_sweep
from .thermomaj import beta_order, enumerate_extremal_states

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4

DEFAULT_REGION_GRID = ("beta_hot:0.01:3:100", "beta_cold:0.01:3:100")
DEFAULT_OSC_SHIFTS = "3,3.5"
DEFAULT_OSC_DIMS = "2:64"


class UsageError(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else ("inf" if value > 0 else "-inf")
    return value


def _float_list(text: str, field: str) -> list:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{field}: expected a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise UsageError(f"--{field}: empty list")
    return values


def _int_range(text: str, field: str) -> list:
    """``"a:b"`` (inclusive) or ``"a,b,c"``."""
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{field}: expected 'a:b' or a comma list of integers, got {text!r}") from None
    if not values:
        raise UsageError(f"--{field}: empty range")
    return values


@dataclass(frozen=True)
class GridAxis:
    name: str
    values: tuple


def parse_grid(text: str, allowed: tuple) -> GridAxis:
    """Parse ``VAR:MIN:MAX:STEPS[:log]``."""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise UsageError(f"--grid {text!r}: expected VAR:MIN:MAX:STEPS[:log]")
    name = parts[0]
    if name not in allowed:
        raise UsageError(f"--grid {text!r}: unknown variable {name!r}; choose from {', '.join(allowed)}")
    try:
        lo, hi, steps = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise UsageError(f"--grid {text!r}: MIN, MAX must be numbers and STEPS an integer") from None
    log = len(parts) == 5
    if log and parts[4] != "log":
        raise UsageError(f"--grid {text!r}: the optional fifth field must be 'log'")
    if steps < 1:
        raise UsageError(f"--grid {text!r}: STEPS must be >= 1")
    if lo > hi:
        raise UsageError(f"--grid {text!r}: MIN exceeds MAX")
    if log and lo <= 0:
        raise UsageError(f"--grid {text!r}: a log grid needs MIN > 0")
    if steps == 1:
        values = np.array([lo])
    elif log:
        values = np.geomspace(lo, hi, steps)
    else:
        values = np.linspace(lo, hi, steps)
    if name == "dim":
        ints = np.rint(values).astype(int)
        values = np.unique(ints) if steps > 1 else ints
    return GridAxis(name, tuple(values.tolist()))


def _grid_points(axes: list, fixed: dict) -> list:
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise UsageError("each --grid variable may appear only once")
    points = []
    for combo in itertools.product(*(a.values for a in axes)):
        point = dict(fixed)
        point.update(zip(names, combo))
        points.append(point)
    return points


def _write(text: str, out: Optional[str]):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _render_table(columns: list, rows: list, fmt: str) -> str:
    if fmt == "json":
        payload = {"columns": columns, "rows": [[_json_value(v) for v in row] for row in rows]}
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _run_pool(func, items: list, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(i) for i in items]


def _state_from_args(args) -> DiagonalState:
    if args.energies is None:
        raise UsageError("--energies is required")
    try:
        spectrum = Spectrum(_float_list(args.energies, "energies"))
    except ValueError as exc:
        raise UsageError(f"--energies: {exc}") from None
    if args.probs is not None and args.beta_cold is not None:
        raise UsageError("give either --probs or --beta-cold, not both")
    if args.probs is not None:
        try:
            return DiagonalState(_float_list(args.probs, "probs"), spectrum)
        except ValueError as exc:
            raise UsageError(f"--probs: {exc}") from None
    if args.beta_cold is not None:
        try:
            return gibbs_state(spectrum, args.beta_cold)
        except ValueError as exc:
            raise UsageError(f"--beta-cold: {exc}") from None
    raise UsageError("a state needs --probs or --beta-cold (Gibbs state)")


def _bath_beta(args) -> float:
    if args.beta is None:
        raise UsageError("--beta (bath inverse temperature) is required")
    if not (args.beta > 0 and math.isfinite(args.beta)):
        raise UsageError(f"--beta: must be positive and finite, got {args.beta!r}")
    return args.beta


def cmd_bound(args) -> int:
    state = _state_from_args(args)
    beta = _bath_beta(args)
    b_star = beta_star(state)
    report = {
        "energies": state.energies.tolist(),
        "probs": state.probs.tolist(),
        "beta": beta,
        "ergotropy": ergotropy(state),
        "passive_state": passive_state(state).probs.tolist(),
        "beta_star": "inf" if b_star is BETA_INF else b_star,
        "bound_single_system": bound_single_system(state),
        "bound_with_bath": bound_with_bath(state, beta),
        "extraction_bound": extraction_bound(state, beta),
    }
    report = {k: (_json_value(v) if not isinstance(v, list) else v) for k, v in report.items()}
    _write(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_extremal(args) -> int:
    state = _state_from_args(args)
    beta = _bath_beta(args)
    states = enumerate_extremal_states(state, beta, max_dim=args.max_dim, workers=args.workers)
    columns = [f"p_{i}" for i in range(state.dim)] + ["beta_order", "energy", "ergotropy"]
    rows = [
        list(s.probs.tolist()) + [beta_order(s, beta).label, energy(s), ergotropy(s)]
        for s in states
    ]
    _write(_render_table(columns, rows, args.format), args.out)
    return EXIT_OK


def _point_spectrum(point: dict, base: Optional[list], ladder: bool) -> Spectrum:
    if ladder:
        return Spectrum.ladder(point["omega"], int(point["dim"]))
    energies = list(base)
    for k in range(1, len(energies)):
        key = f"omega_{k}"
        if key in point:
            energies[k] = point[key]
    try:
        return Spectrum(energies)
    except ValueError as exc:
        raise UsageError(f"grid point {point}: {exc}") from None


def _betas_or_fail(point: dict):
    for key in ("beta_hot", "beta_cold"):
        if point.get(key) is None:
            raise UsageError(f"{key} needs a fixed value (--{key.replace('_', '-')}) or a --grid axis")
        if not (point[key] > 0 and math.isfinite(point[key])):
            raise UsageError(f"{key} must be positive and finite, got {point[key]!r}")
    return point["beta_hot"], point["beta_cold"]


def cmd_engine_sweep(args) -> int:
    ladder = args.energies is None
    if ladder and args.omega is None:
        raise UsageError("give --energies, or --omega (with --dim) for an equally spaced spectrum")
    base = None if ladder else _float_list(args.energies, "energies")
    allowed = ("beta_hot", "beta_cold", "omega", "dim") if ladder else (
        ("beta_hot", "beta_cold") + tuple(f"omega_{k}" for k in range(1, len(base)))
    )
    axes = [parse_grid(g, allowed) for g in args.grid or []]
    fixed = {"beta_hot": args.beta_hot, "beta_cold": args.beta_cold}
    if ladder:
        fixed.update(omega=args.omega, dim=args.dim)
        if args.dim is None and not any(a.name == "dim" for a in axes):
            raise UsageError("--dim (or a dim grid axis) is required with --omega")
    points = _grid_points(axes, fixed)
    work_items = []
    for p in points:
        bh, bc = _betas_or_fail(p)
        if bh > bc:
            continue
        work_items.append((bh, bc, _point_spectrum(p, base, ladder)))
    max_d = max((s.dim for _, _, s in work_items), default=len(base) if base else 2)

    def run(item):
        bh, bc, spectrum = item
        report = evaluate_engine(spectrum, bc, bh, max_dim=args.max_dim)
        omegas = spectrum.energies[1:].tolist() + [None] * (max_d - spectrum.dim)
        return [bh, bc, *omegas, spectrum.dim, report.work_max, report.efficiency_max,
                report.optimal_protocol_label, report.carnot]

    rows = _run_pool(run, work_items, args.workers)
    columns = ["beta_hot", "beta_cold"] + [f"omega_{k}" for k in range(1, max_d)] + [
        "dim", "work_max", "efficiency_max", "optimal_protocol_label", "carnot"]
    _write(_render_table(columns, rows, args.format), args.out)
    return EXIT_OK


def cmd_region_map(args) -> int:
    if args.energies is not None and args.omega is not None:
        raise UsageError("give either --energies or --omega, not both")
    if args.energies is not None:
        base = _float_list(args.energies, "energies")
    else:
        base = [0.0, 1.0, 2.0 if args.omega is None else args.omega]
    if len(base) != 3:
        raise UsageError(f"region-map needs a three-level spectrum, got {len(base)} levels")
    allowed = ("beta_hot", "beta_cold", "omega", "omega_1", "omega_2")
    fixed = {"beta_hot": args.beta_hot, "beta_cold": args.beta_cold}
    grids = args.grid or [g for g in DEFAULT_REGION_GRID if fixed[g.split(":")[0]] is None]
    axes = [parse_grid(g, allowed) for g in grids]
    points = _grid_points(axes, fixed)
    items = []
    for p in points:
        bh, bc = _betas_or_fail(p)
        if bh > bc:
            continue
        if "omega" in p:
            p["omega_2"] = p.pop("omega")
        items.append((bh, bc, _point_spectrum(p, base, False)))

    def run(item):
        bh, bc, spectrum = item
        return [bh, bc, evaluate_engine(spectrum, bc, bh).optimal_protocol_label]

    rows = _run_pool(run, items, args.workers)
    _write(_render_table(["beta_hot", "beta_cold", "label"], rows, args.format), args.out)
    return EXIT_OK


def cmd_oscillator(args) -> int:
    beta = _bath_beta(args)
    if args.omegas is not None and args.shifts is not None:
        raise UsageError("give either --omegas or --shifts, not both")
    if args.omegas is not None:
        omegas = _float_list(args.omegas, "omegas")
        if any(not w > 0 for w in omegas):
            raise UsageError("--omegas: frequencies must be positive")
    else:
        shifts = _float_list(args.shifts or DEFAULT_OSC_SHIFTS, "shifts")
        if any(not t > 0 for t in shifts):
            raise UsageError("--shifts: shifts must be positive")
        omegas = [frequency_for_shift(beta, t) for t in shifts]
    dims = _int_range(args.dims or DEFAULT_OSC_DIMS, "dims")
    if min(dims) < 2:
        raise UsageError("--dims: every dimension must be >= 2")
    rows = saturation_sweep(omegas, beta, dims, workers=args.workers)
    columns = ["omega", "dim", "delta", "ergotropy", "bound", "bound_infinite", "truncation_ok"]
    _write(_render_table(columns, [list(r) for r in rows], args.format), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergoflow",
        description="Ergotropy bounds, thermal-operation polytopes and open-cycle heat engines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="worker threads (default: logical cores)")
        p.add_argument("--max-dim", type=int, default=None,
                       help="enumeration cap on the dimension (default 9, env ERGOFLOW_MAX_DIM)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    def state_args(p):
        p.add_argument("--energies", help="comma-separated energies, ground level 0")
        p.add_argument("--probs", help="comma-separated populations")
        p.add_argument("--beta-cold", type=float, help="use the Gibbs state at this inverse temperature")
        p.add_argument("--beta", "--beta-hot", dest="beta", type=float, help="bath inverse temperature")

    p = sub.add_parser("bound", help="ergotropy, passive state, beta* and the three bounds (JSON)")
    state_args(p)
    common(p, fmt=False)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("extremal", help="extremal states reachable by thermal operations")
    state_args(p)
    common(p)
    p.set_defaults(func=cmd_extremal)

    for name, func, doc in (
        ("engine-sweep", cmd_engine_sweep, "optimal work and efficiency over a parameter grid"),
        ("region-map", cmd_region_map, "optimal qutrit protocol over a (beta_hot, beta_cold) grid"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--energies", help="comma-separated energies, ground level 0")
        p.add_argument("--omega", type=float,
                       help="engine-sweep: ladder spacing (with --dim); region-map: top level of (0, 1, omega)")
        p.add_argument("--beta-hot", type=float)
        p.add_argument("--beta-cold", type=float)
        p.add_argument("--grid", action="append", metavar="VAR:MIN:MAX:STEPS[:log]",
                       help="repeatable; the first axis varies slowest")
        if name == "engine-sweep":
            p.add_argument("--dim", type=int, help="number of levels for a ladder spectrum")
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("oscillator", help="ground-state oscillator saturation sweep")
    p.add_argument("--beta", type=float, default=1.0, help="bath inverse temperature (default 1)")
    p.add_argument("--omegas", help="comma-separated level spacings")
    p.add_argument("--shifts", help=f"comma-separated log(Z)/(beta omega) targets (default {DEFAULT_OSC_SHIFTS})")
    p.add_argument("--dims", help=f"'a:b' or comma list (default {DEFAULT_OSC_DIMS})")
    common(p)
    p.set_defaults(func=cmd_oscillator)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ergoflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"ergoflow {args.command}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"ergoflow {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"ergoflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
