"""Command-line front-end.

Subcommands: calibrate, barrier, value-curve, figure, lambda-sweep,
mc-check.  All numeric output goes to CSV/JSON so plots can be produced by
external tooling; every CSV value is computed by the library API, and reruns
with the same config and seed are byte identical.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from .levy_model import (
    JumpSide,
    LevyModel,
    ParameterError,
    calibrate_drift,
    check_call_assumption,
    model_from_config,
    phi,
    psi,
)
from .mc_oracle import MCConfig, simulate_strategy_value
from .periodic_pricer import (
    AssumptionError,
    OptionKind,
    OptionSpec,
    barrier_solution_json,
    classical_barrier,
    classical_curve,
    figure_grid,
    solve_barrier,
    value_at_optimum,
    value_curve,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSUMPTION = 2
EXIT_VALIDATION = 3

CSV_HEADER = ("s", "value", "payoff", "barrier", "case", "lambda")


def _lambda_grid(kind: OptionKind):
    """The exercise-rate sweeps used by the reference experiments."""
    grid = [i / 1000 for i in range(1, 10)]
    grid += [i / 100 for i in range(1, 10)]
    grid += [i / 10 for i in range(1, 10)]
    if kind is OptionKind.PUT:
        grid += list(range(1, 11))
    else:
        grid += list(range(1, 10))
        grid += [10 * i for i in range(1, 21)]
    return [float(v) for v in grid]


def _parse_grid(spec: str, strike: float):
    if spec is None:
        return figure_grid(strike)
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ParameterError(f"bad grid spec {spec!r}; expected min:max:n[:log]")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if not (lo < hi) or n < 2:
        raise ParameterError(f"bad grid spec {spec!r}: need min < max and n >= 2")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ParameterError(f"bad grid spec {spec!r}: trailing token must be 'log'")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _build_model(args) -> LevyModel:
    if args.model:
        return model_from_config(args.model)
    side = JumpSide(args.side)
    if args.drift is None:
        drift = calibrate_drift(args.sigma, args.jump_rate, args.jump_param, side, args.rate, args.delta)
    else:
        drift = args.drift
    return LevyModel(side, args.sigma, drift, args.jump_rate, args.jump_param)


def _build_option(args) -> OptionSpec:
    return OptionSpec(OptionKind(args.kind), args.strike, args.rate, getattr(args, "lam"))


def _write_csv(path, rows):
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    finally:
        if path:
            out.close()


def cmd_calibrate(args) -> int:
    model = _build_model(args)
    sn = model.sn_view()
    logmean = psi(model, 1.0) if check_call_assumption(model, math.inf) else math.inf
    ok = check_call_assumption(model, args.rate)
    print(f"side: {model.side.value}")
    print(f"drift: {model.drift!r}")
    print(f"log E[S_1]: {logmean!r}")
    print(f"call assumption (log E[S_1] < r): {'satisfied' if ok else 'VIOLATED'}")
    print(f"Phi(r): {phi(sn, args.rate)!r}")
    print(f"Phi(r+lambda): {phi(sn, args.rate + args.lam)!r}")
    if args.kind == "call" and not ok:
        return EXIT_ASSUMPTION
    return EXIT_OK


def cmd_barrier(args) -> int:
    model = _build_model(args)
    option = _build_option(args)
    sol = solve_barrier(model, option)
    print(barrier_solution_json(sol))
    print(f'{{"classical_barrier": {classical_barrier(model, option)!r}}}')
    return EXIT_OK


def cmd_value_curve(args) -> int:
    model = _build_model(args)
    option = _build_option(args)
    grid = _parse_grid(args.grid, option.strike)
    if args.barrier is not None:
        curve = value_curve(model, option, math.log(args.barrier), grid)
    else:
        _, curve = value_at_optimum(model, option, grid)
    _write_csv(args.out, curve.csv_rows())
    return EXIT_OK


def _suboptimal_barriers(option: OptionSpec, optimum: float):
    """The reference suboptimal-barrier menus (price units)."""
    k = option.strike
    if option.kind is OptionKind.PUT:
        return [optimum / 3.0, 2.0 * optimum / 3.0, (optimum + k) / 2.0, k]
    return [k, (optimum + k) / 2.0, optimum + 50.0, optimum + 100.0]


def cmd_figure(args) -> int:
    model = _build_model(args)
    kind = OptionKind.PUT if args.figure.startswith("put") else OptionKind.CALL
    if "lambda-sweep" in args.figure:
        return _lambda_sweep(model, kind, args, _lambda_grid(kind))
    option = OptionSpec(kind, args.strike, args.rate, args.lam)
    grid = _parse_grid(args.grid, option.strike)
    sol, curve = value_at_optimum(model, option, grid)
    rows = list(curve.csv_rows())
    for b in _suboptimal_barriers(option, sol.barrier):
        rows.extend(value_curve(model, option, math.log(b), grid).csv_rows())
    _write_csv(args.out, rows)
    return EXIT_OK


def _lambda_sweep(model: LevyModel, kind: OptionKind, args, lambdas) -> int:
    grid = _parse_grid(args.grid, args.strike)
    rows = []
    for lam in lambdas:
        option = OptionSpec(kind, args.strike, args.rate, lam)
        _, curve = value_at_optimum(model, option, grid)
        rows.extend(curve.csv_rows())
    _, cc = classical_curve(model, OptionSpec(kind, args.strike, args.rate, lambdas[-1]), grid)
    rows.extend(cc.csv_rows())
    _write_csv(args.out, rows)
    return EXIT_OK


def cmd_lambda_sweep(args) -> int:
    model = _build_model(args)
    kind = OptionKind(args.kind)
    if args.lambdas:
        lambdas = [float(v) for v in args.lambdas.split(",")]
    else:
        lambdas = _lambda_grid(kind)
    return _lambda_sweep(model, kind, args, lambdas)


def cmd_mc_check(args) -> int:
    model = _build_model(args)
    option = _build_option(args)
    sol = solve_barrier(model, option)
    k = option.strike
    spots = [k / 2, 0.75 * k, k, 1.5 * k, 2 * k]
    cfg = MCConfig(n_paths=args.paths, horizon=args.horizon, seed=args.seed)
    _, curve = value_at_optimum(model, option, np.array(spots))
    ok = True
    print("s,analytic,mc_mean,stderr,z")
    for s, analytic in zip(spots, curve.values):
        analytic = float(analytic)
        est = simulate_strategy_value(model, option, sol.log_barrier, math.log(s), cfg)
        z = (est.mean - analytic) / est.stderr if est.stderr > 0 else 0.0
        if abs(z) > 3.0 or est.truncation_bound > est.stderr / 10.0:
            ok = False
        print(f"{s!r},{analytic!r},{est.mean!r},{est.stderr!r},{z!r}")
    print(f"result: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VALIDATION


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--model", help="JSON model config file")
    p.add_argument("--side", choices=["sn", "sp"], default="sn")
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--drift", type=float, default=None, help="omit to calibrate from --rate/--delta")
    p.add_argument("--jump-rate", type=float, default=1.0)
    p.add_argument("--jump-param", type=float, default=2.0)
    p.add_argument("--kind", choices=["put", "call"], default="put")
    p.add_argument("--strike", type=float, default=50.0)
    p.add_argument("--rate", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.03)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--grid", help="spot grid as min:max:n[:log]")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--paths", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--horizon", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="periodic-american",
        description="Perpetual American options with Poissonian exercise opportunities",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [
        ("calibrate", cmd_calibrate),
        ("barrier", cmd_barrier),
        ("value-curve", cmd_value_curve),
        ("figure", cmd_figure),
        ("lambda-sweep", cmd_lambda_sweep),
        ("mc-check", cmd_mc_check),
    ]:
        p = sub.add_parser(name)
        _add_common(p)
        if name == "figure":
            p.add_argument(
                "figure",
                choices=["put-curves", "call-curves", "put-lambda-sweep", "call-lambda-sweep"],
            )
        if name == "value-curve":
            p.add_argument("--barrier", type=float, default=None, help="price-level barrier override")
        if name == "lambda-sweep":
            p.add_argument("--lambdas", help="comma-separated exercise rates")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except AssumptionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
