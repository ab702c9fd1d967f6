"""Command-line front end.

Commands: capacity, exponent, bounds, oracle, simulate, sweep.  CSV output
is byte-deterministic for a fixed config and seed: numeric fields use nine
significant digits with C-locale formatting, and worker parallelism never
changes which random stream serves which trial chunk.

Exit codes: 0 success, 2 configuration/parse error, 3 numeric failure,
4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .channel import capacity_blahut_arimoto, parse_channel_spec
from .config import build_encoder, build_instance, load_config, solver_opts
from .errors import BudgetExceeded, ConfigError, DhtError
from .multiletter import OracleOpts, theta_multiletter
from .simulate import SimConfig, exact_typical_set_beta, merge_estimates, run_trials
from .singleletter import bt_inner_bound, bt_outer_bound, sweep_tau, theta_single_helper

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "%.9g" % x
    return str(x)


def _write_csv(path: str | None, header: list[str], rows: list[list]) -> None:
    text = "\n".join([",".join(header)] + [",".join(_fmt(c) for c in row) for row in rows]) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, newline="\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the JSON run configuration")
    p.add_argument("--tau", type=float, default=None, help="override the configured bandwidth ratio")
    p.add_argument("--seed", type=int, default=None, help="override the configured master seed")
    p.add_argument("--threads", type=int, default=None, help="worker cap (results never depend on it)")
    p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p.add_argument("--grid-res", type=float, default=None, help="grid resolution override")
    p.add_argument("--trials", type=int, default=None, help="override the trial count")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dht", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capacity", help="channel capacity via Blahut-Arimoto")
    cap.add_argument("--channel", required=True, help="bsc:<p>, bec:<e> or matrix:<csv>")

    for name in ("exponent", "bounds", "oracle", "simulate", "sweep"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "oracle":
            p.add_argument("--k", type=int, default=None, help="source block length")
    return parser


def cmd_capacity(args) -> int:
    ch = parse_channel_spec(args.channel)
    res = capacity_blahut_arimoto(ch)
    print("%.6f" % res.capacity)
    return EXIT_OK


def _sweep_header() -> list[str]:
    return ["tau", "value", "lower_bound", "upper_bound", "status", "restarts_used"]


def cmd_exponent(args) -> int:
    cfg = load_config(args.config)
    inst = build_instance(cfg, tau=args.tau)
    opts = solver_opts(cfg, seed=args.seed, grid_res=args.grid_res)
    if inst.L == 1:
        res = theta_single_helper(inst, opts)
        row = [inst.tau, res.value, res.value, res.value, res.status, res.restarts_used]
        summary = f"theta={res.value:.6f} status={res.status} restarts={res.restarts_used}"
    else:
        inner = bt_inner_bound(inst, opts)
        outer = bt_outer_bound(inst, opts)
        row = [inst.tau, inner.value, inner.value, outer.value, inner.status, inner.restarts_used]
        summary = f"theta_lower={inner.value:.6f} theta_upper={outer.value:.6f}"
    _write_csv(args.out, _sweep_header(), [row])
    print(summary)
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    inst = build_instance(cfg, tau=args.tau)
    opts = solver_opts(cfg, seed=args.seed, grid_res=args.grid_res)
    inner = bt_inner_bound(inst, opts)
    outer = bt_outer_bound(inst, opts)
    row = [inst.tau, inner.value, inner.value, outer.value, outer.status, inner.restarts_used]
    _write_csv(args.out, _sweep_header(), [row])
    print(
        f"rate_inner={inner.rate_bound:.6f} rate_outer={outer.rate_bound:.6f} "
        f"exponent_lower={inner.value:.6f} exponent_upper={outer.value:.6f}"
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    inst = build_instance(cfg, tau=args.tau)
    k = args.k if args.k is not None else cfg.k
    denom = 16 if args.grid_res is None else max(int(round(1.0 / args.grid_res)), 2)
    opts = OracleOpts(res=denom, cell_budget=cfg.budget_cells, max_helpers=max(inst.L, 1))
    res = theta_multiletter(inst, k, opts)
    n = int(math.floor(inst.tau * k + 1e-12))
    row = [k, n, res.theta_k_tau, res.r_k, res.enumerated, res.grid_resolution]
    _write_csv(args.out, ["k", "n", "theta_k_tau", "r_k", "enumerated", "resolution"], [row])
    print(f"k={k} n={n} theta_k_tau={res.theta_k_tau:.6f} r_k={res.r_k:.6f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    inst = build_instance(cfg, tau=args.tau)
    enc = build_encoder(cfg, inst, cfg.k)
    sim = SimConfig(
        instance=inst,
        encoder=enc,
        j_values=tuple(cfg.j_values),
        delta0=cfg.delta0,
        delta_exponent=cfg.delta_exponent,
        trials=args.trials if args.trials is not None else cfg.trials,
        seed=args.seed if args.seed is not None else cfg.seed,
        budget=cfg.budget_cells,
    )
    threads = args.threads if args.threads is not None else cfg.threads
    h0 = run_trials(sim, "H0", threads=threads)
    h1 = run_trials(sim, "H1", threads=threads)
    exacts = {}
    for j in sim.j_values:
        try:
            exacts[j] = exact_typical_set_beta(sim, j).exponent
        except BudgetExceeded:
            continue
    rows = [
        [e.j, e.alpha_hat, e.alpha_ci, e.beta_hat, e.beta_ci, e.exact_beta_exponent, e.delta]
        for e in merge_estimates(h0, h1, exacts)
    ]
    header = ["j", "alpha_hat", "alpha_ci", "beta_hat", "beta_ci", "beta_exact_exponent", "delta_j"]
    _write_csv(args.out, header, rows)
    last = rows[-1]
    print(f"j={last[0]} alpha_hat={_fmt(last[1])} beta_hat={_fmt(last[3])}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    inst = build_instance(cfg, tau=args.tau)
    grid = cfg.tau_grid
    if grid is None:
        raise ConfigError("tau_grid: required for the sweep command")
    opts = solver_opts(cfg, seed=args.seed, grid_res=args.grid_res)
    rows = [
        [r.tau, r.value, r.lower_bound, r.upper_bound, r.status, r.restarts_used]
        for r in sweep_tau(inst, grid, opts)
    ]
    _write_csv(args.out, _sweep_header(), rows)
    print(f"swept {len(rows)} points: tau in [{grid[0]:g}, {grid[-1]:g}]")
    return EXIT_OK


_COMMANDS = {
    "capacity": cmd_capacity,
    "exponent": cmd_exponent,
    "bounds": cmd_bounds,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DhtError, FloatingPointError, AssertionError) as exc:
        print(f"numeric failure [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
