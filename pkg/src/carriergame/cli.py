"""Command-line front end: ``carriergame {solve,sweep,bound,oracle-compare}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import analysis, simulator
from .channel import ChannelRealization, GameConfig, sample_channels, snr_db_to_sigma2
from .efficiency import EfficiencyModel, solve_gamma_star
from .equilibrium import nash_solve, oracle_stackelberg, stackelberg_solve

log = logging.getLogger("carriergame")

BOUND_COLUMNS = ("K", "gamma_star", "p_nocoord_bound", "p_nocoord_nash_exact", "se_bound")
ORACLE_COLUMNS = ("trials", "K", "max_rel_gap", "mean_rel_gap", "frac_within_tol", "tol")


class UsageError(Exception):
    pass


def _int_range(text: str) -> List[int]:
    try:
        vals = simulator.parse_values(text, "K")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("K values must be positive integers")
    return vals


def _common(p: argparse.ArgumentParser, K_default="4"):
    p.add_argument("--M", type=int, default=100, help="block length of f(x) = (1 - e^-x)^M")
    p.add_argument("--K", type=_int_range, default=_int_range(K_default),
                   help="number of carriers (single value, list or lo..hi range)")
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--theta", type=float, default=0.0, help="inter-user fading correlation in [0, 1]")
    p.add_argument("--rate1", type=float, default=1e6)
    p.add_argument("--rate2", type=float, default=1e6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carriergame",
                                     description="Two-user multi-carrier energy-efficient power control game.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one channel realization")
    _common(p)
    p.add_argument("--gains", type=Path, help="file with two lines of K positive gains")
    p.add_argument("--g1", type=str, help="comma-separated gains of user 1 (leader)")
    p.add_argument("--g2", type=str, help="comma-separated gains of user 2 (follower)")

    p = sub.add_parser("sweep", help="Monte Carlo sweep")
    _common(p)
    p.add_argument("--var", choices=simulator.VARIABLES, required=True)
    p.add_argument("--values", type=str, required=True, help="e.g. 2,4,8 or 2..32")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: CARRIERGAME_THREADS or 1)")

    p = sub.add_parser("bound", help="tabulate coordination and spectral-efficiency bounds")
    _common(p, K_default="1..32")

    p = sub.add_parser("oracle-compare", help="closed-form vs brute-force Stackelberg solver")
    _common(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--points-per-decade", type=int, default=200)
    p.add_argument("--tol", type=float, default=0.005)
    return parser


def _emit(rows: List[dict], columns, args, payload=None) -> str:
    if args.format == "json":
        text = json.dumps(payload if payload is not None else rows, indent=2) + "\n"
    else:
        lines = [",".join(columns)] + [",".join(simulator._fmt(r[c]) for c in columns) for r in rows]
        text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return text


def _single_K(args) -> int:
    if len(args.K) != 1:
        raise UsageError("--K must be a single value for this command")
    return args.K[0]


def _config(args, K: int) -> GameConfig:
    try:
        return GameConfig(K=K, sigma2=snr_db_to_sigma2(args.snr_db), rates=(args.rate1, args.rate2),
                          theta=args.theta, model=EfficiencyModel.exp_block(args.M))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def read_gains(path: Path) -> np.ndarray:
    rows = [line.split() for line in path.read_text().splitlines() if line.strip()]
    if len(rows) != 2 or len(rows[0]) != len(rows[1]):
        raise UsageError(f"{path}: expected two lines with the same number of gains")
    return np.array(rows, dtype=float)


def _outcome_row(name, outcome, channel) -> dict:
    p = outcome.alloc.powers if outcome.alloc is not None else None
    carriers = outcome.active_carriers

    def power(n):
        return float(p[n, carriers[n]]) if p is not None and carriers[n] is not None else math.nan

    def util(n):
        return math.nan if outcome.utilities[n] is None else outcome.utilities[n]

    return {
        "solver": name, "kind": outcome.kind.value, "branch": outcome.branch.value,
        "coordinated": int(outcome.coordinated),
        "carrier_leader": "" if carriers[0] is None else carriers[0],
        "carrier_follower": "" if carriers[1] is None else carriers[1],
        "power_leader": power(0), "power_follower": power(1),
        "utility_leader": util(0), "utility_follower": util(1),
        "se": analysis.realized_spectral_efficiency(outcome, channel),
    }


def cmd_solve(args) -> int:
    if args.gains is not None:
        gains = read_gains(args.gains)
    elif args.g1 and args.g2:
        try:
            gains = np.array([[float(v) for v in args.g1.split(",")], [float(v) for v in args.g2.split(",")]])
        except ValueError as exc:
            raise UsageError(f"bad gains: {exc}") from exc
    else:
        raise UsageError("solve needs --gains FILE or both --g1 and --g2")
    K = gains.shape[1]
    config = _config(args, K)
    try:
        channel = ChannelRealization(gains, config.sigma2, config.rates)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    g = solve_gamma_star(config.model).value
    rows = [_outcome_row("stackelberg", stackelberg_solve(channel, config, g), channel),
            _outcome_row("nash", nash_solve(channel, config, g), channel)]
    columns = tuple(rows[0])
    payload = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in rows]
    _emit(rows, columns, args, payload)
    return 0


def cmd_sweep(args) -> int:
    try:
        values = simulator.parse_values(args.values, args.var)
        K = values[0] if args.var == "K" else _single_K(args)
        base = _config(args, max(K, 2))
        spec = simulator.SweepSpec(variable=args.var, values=tuple(values), trials=args.trials,
                                   base_config=base, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = simulator.run_sweep(spec, workers=args.workers)
    if args.format == "json":
        _emit(result.rows, simulator.CSV_COLUMNS, args, result.to_dict())
    else:
        text = result.to_csv()
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text)
    return 0


def cmd_bound(args) -> int:
    g = solve_gamma_star(EfficiencyModel.exp_block(args.M)).value
    rows = [{"K": K, "gamma_star": g,
             "p_nocoord_bound": analysis.no_coordination_bound(K, g).bound,
             "p_nocoord_nash_exact": analysis.nash_no_coordination_probability(K, g),
             "se_bound": analysis.spectral_efficiency_bound(K, g)} for K in args.K]
    _emit(rows, BOUND_COLUMNS, args)
    return 0


def oracle_compare(config: GameConfig, trials: int, seed: int, points_per_decade: int = 200,
                   tol: float = 0.005) -> dict:
    """Relative shortfall (oracle - closed form) / oracle of the leader's utility."""
    g = solve_gamma_star(config.model).value
    gaps = np.empty(trials)
    for t in range(trials):
        ch = sample_channels(config, seed, t)
        closed = stackelberg_solve(ch, config, g).utilities[0]
        oracle = oracle_stackelberg(ch, config, g, points_per_decade=points_per_decade).utilities[0]
        gaps[t] = (oracle - closed) / oracle
    return {"trials": trials, "K": config.K, "max_rel_gap": float(gaps.max()),
            "mean_rel_gap": math.fsum(gaps) / trials, "frac_within_tol": float(np.mean(gaps <= tol)),
            "tol": tol}


def cmd_oracle(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    config = _config(args, _single_K(args))
    row = oracle_compare(config, args.trials, args.seed, args.points_per_decade, args.tol)
    _emit([row], ORACLE_COLUMNS, args, row)
    return 0


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "bound": cmd_bound, "oracle-compare": cmd_oracle}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"carriergame: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
