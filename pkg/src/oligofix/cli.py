"""Command-line front end.

Subcommands: triopoly, iterate, contraction, large-market, welfare.
Every command accepts --config FILE (JSON) plus flags that override the
file.  Reports are JSON by default; large-market emits the fixed-header CSV
with --format csv, and --figures DIR renders the comparison figures next to
the delimited output.

Exit codes: 0 success, 2 divergent/failed iteration, 3 configuration error,
4 numeric or I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, EvaluationError, NumericsError
from .reporting import (
    RunConfig,
    emit_csv,
    emit_json,
    large_market_rows,
    parse_config,
    render_csv_rows,
    render_json,
    run,
)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--A", help="demand intercept (decimal or p/q)")
    sub.add_argument("--B", help="demand slope (decimal or p/q)")
    sub.add_argument("--c", help="cost coefficient (decimal or p/q)")
    sub.add_argument("--demand", choices=["linear-demand", "arctan-demand"])
    sub.add_argument("--cost", choices=["linear-cost", "quadratic-cost", "exp-cost"])
    sub.add_argument("--seed", type=int, help="rng seed (OLIGOFIX_SEED overrides)")
    sub.add_argument("--format", choices=["json", "csv"], dest="format")
    sub.add_argument("--out", help="output path (stdout when omitted)")


def _add_solver(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--mode", choices=["reduced", "general"])
    sub.add_argument("--system", choices=["stackelberg-affine", "divergent-affine"],
                     help="named affine stage-map preset")
    sub.add_argument("--start", help="starting triple, e.g. 0,0,0")
    sub.add_argument("--tol", help="step tolerance for the iteration")
    sub.add_argument("--max-iter", type=int, dest="max_iter")
    sub.add_argument("--divergence-radius", dest="divergence_radius")
    sub.add_argument("--bracket", help="root-search interval lo,hi for inner solves")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oligofix",
        description="Cournot and sequential-oligopoly equilibria via response-map fixed points")
    commands = parser.add_subparsers(dest="command", required=True)

    tri = commands.add_parser("triopoly", help="solve a three-firm market")
    _add_common(tri)
    _add_solver(tri)
    tri.add_argument("--model", choices=["cournot", "stackelberg"])
    tri.add_argument("--method", choices=["picard", "direct"])

    it = commands.add_parser("iterate", help="run the successive-application iteration")
    _add_common(it)
    _add_solver(it)
    it.add_argument("--model", choices=["cournot", "stackelberg"])

    con = commands.add_parser("contraction", help="sample a contraction certificate over a box")
    _add_common(con)
    _add_solver(con)
    con.add_argument("--model", choices=["cournot", "stackelberg"])
    con.add_argument("--box", help="'lo,hi' shared by all axes or six numbers")
    con.add_argument("--samples", type=int)

    lm = commands.add_parser("large-market", help="n-firm tables for the four model families")
    _add_common(lm)
    lm.add_argument("--families", help="'all' or comma-separated codes CL,CQ,SL,SQ")
    lm.add_argument("--n", help="market-size range lo..hi")
    lm.add_argument("--figures", dest="figures_dir",
                    help="directory for rendered comparison figures")

    wel = commands.add_parser("welfare", help="triopoly consumer/total surplus comparison")
    _add_common(wel)
    wel.add_argument("--model", choices=["cournot", "stackelberg", "both"])
    wel.add_argument("--figures", dest="figures_dir",
                     help="directory for the surplus figure")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    config_path = args.pop("config", None)
    flags = {key: value for key, value in args.items() if value is not None}

    try:
        cfg = parse_config(config_path, flags)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3

    try:
        envelope, code = run(cfg)
        _emit(cfg, envelope)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except (NumericsError, EvaluationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return code


def _emit(cfg: RunConfig, envelope) -> None:
    if cfg.format == "csv" and cfg.command == "large-market":
        rows = large_market_rows(cfg)
        if cfg.out:
            emit_csv(rows, cfg.out)
        else:
            sys.stdout.write(render_csv_rows(rows))
        return
    if cfg.out:
        emit_json(envelope, cfg.out)
    else:
        sys.stdout.write(render_json(envelope))


if __name__ == "__main__":
    sys.exit(main())
