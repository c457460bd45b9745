"""Command-line entry point: ``stopval solve|value-of-info|compare|stopping-time|reproduce``."""

import argparse
import sys
from math import comb
from pathlib import Path

import numpy as np

from .belief import blackwell_compare
from .config import ConfigError, load_config
from .errors import StopvalError
from .fee_design import evaluate_fee, zero_fee_value
from .fees import Zero
from .markov import solve_markov
from .multi_signal import solve_multi_signal
from .problem import stopping_payoffs
from .report import format_cell, table_text, write_metadata, write_table
from .reproduce import EXAMPLES, reproduce
from .solver import ACQUIRE, EXIT, STOP, WAIT, solve_finite, solve_infinite
from .stopping_time import exact_distribution, fosd_check, simulate_distribution, ssd_check

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_REPRODUCE = 0, 2, 3, 4
_CHOICE_NAMES = {STOP: "stop", ACQUIRE: "acquire", WAIT: "wait", EXIT: "exit"}
_GRID_CAP = 20_000


def belief_grid(m, points):
    """Evenly spaced beliefs: a line for two states, a barycentric lattice otherwise."""
    if m == 2:
        x = np.linspace(1.0, 0.0, points)
        return np.column_stack([x, 1.0 - x])[::-1]
    resolution = points - 1
    while _lattice_size(m, resolution) > _GRID_CAP and resolution > 1:
        resolution -= 1
    rows = []

    def fill(prefix, remaining, slots):
        if slots == 1:
            rows.append(prefix + [remaining])
            return
        for i in range(remaining + 1):
            fill(prefix + [i], remaining - i, slots - 1)

    fill([], resolution, m)
    return np.array(rows[::-1], dtype=float) / resolution


def _lattice_size(m, resolution):
    return comb(resolution + m - 1, m - 1)


def _solve(problem, config):
    wait = problem.has_dynamics
    if problem.is_infinite:
        return solve_infinite(problem, tol=config.solver.tol, wait=wait)
    return solve_finite(problem, wait=wait)


def _layers(problem, solution):
    if problem.is_infinite:
        return [("inf", solution.layer)]
    return [(n, solution.policy(n)) for n in range(problem.horizon + 1)]


def _load(path):
    config = load_config(path)
    return config, config.to_problem(), Path(path).read_text(encoding="utf-8")


def _emit(out, name, header, rows, written):
    if out is None:
        sys.stdout.write(f"# {name}\n" + table_text(header, rows))
    else:
        write_table(out / name, header, rows)
        written.append(name)


def _fee_summary(problem, config):
    """Rows describing the configured fee scheme, when there is one."""
    fee = config.to_fee()
    if config.quota is not None:
        sol = solve_multi_signal(problem, config.quota.K, config.quota.L, fee, budget=config.solver.tree_budget)
        return [("quota_root_value", sol.root_value), ("quota_accepted", sol.accepted),
                ("quota_first_batch", sol.root.batch)]
    if isinstance(fee, Zero) or problem.is_infinite:
        return []
    if problem.has_dynamics:
        sol = solve_markov(problem, fee, max_signals=config.solver.max_signals, budget=config.solver.tree_budget)
        return [("fee_root_value", sol.root_value), ("fee_accepted", sol.accepted)]
    ev = evaluate_fee(problem, fee, budget=config.solver.tree_budget)
    return [("fee_root_value", ev.dm_value), ("fee_accepted", ev.accepted),
            ("fee_gross_value", ev.gross_value), ("fee_expected_total", ev.expected_total_fee)]


def cmd_solve(args):
    config, problem, text = _load(args.config)
    if args.tol is not None:
        config.solver.tol = args.tol
    solution = _solve(problem, config)
    grid = belief_grid(problem.state_count, config.solver.grid_points)
    labels = [f"mu_{s}" for s in config.states]
    out = _prepare_out(args.out)
    written = []

    value_rows, threshold_rows = [], []
    pi = stopping_payoffs(grid, problem)[0]
    for period, layer in _layers(problem, solution):
        values = layer.value.evaluate(grid)
        codes = layer.choices(grid)
        for mu, v, p, c in zip(grid, values, pi, codes):
            value_rows.append((period, *mu, v, p, _CHOICE_NAMES[int(c)]))
        threshold_rows.append((period, layer.threshold, layer.orientation))
    _emit(out, "values.csv", ["period", *labels, "value", "stop_payoff", "choice"], value_rows, written)
    _emit(out, "thresholds.csv", ["period", "threshold", "orientation"], threshold_rows, written)

    pi0 = float(stopping_payoffs(problem.prior[None, :], problem)[0][0])
    v0 = _layers(problem, solution)[0][1].value.evaluate(problem.prior[None, :])[0]
    summary = [("prior_value", v0), ("prior_stop_payoff", pi0), ("value_of_information", max(0.0, v0 - pi0))]
    summary += _fee_summary(problem, config)
    _emit(out, "policy.csv", ["quantity", "value"], summary, written)
    if out is not None:
        write_metadata(out, "solve", [text], config.solver.seed, written)
    return EXIT_OK


def cmd_value_of_info(args):
    config, problem, _ = _load(args.config)
    pi0 = float(stopping_payoffs(problem.prior[None, :], problem)[0][0])
    if problem.has_dynamics:
        sol = solve_markov(problem, max_signals=config.solver.max_signals, budget=config.solver.tree_budget)
        v0, reference = sol.root_value, sol.rejection_value
    else:
        v0, reference = zero_fee_value(problem), pi0
    phi = max(0.0, v0 - reference)
    print(f"phi={format_cell(phi)}")
    print(f"pi={format_cell(pi0)}")
    print(f"V0={format_cell(v0)}")
    fee = config.to_fee()
    if config.fee is not None:
        verdict = _acceptance(problem, config, fee)
        print(f"fee={config.fee.variant} verdict={'accepted' if verdict else 'rejected'}")
    return EXIT_OK


def _acceptance(problem, config, fee):
    if problem.is_infinite:
        raise ConfigError("fee", "fee evaluation needs a finite horizon")
    if config.quota is not None:
        return solve_multi_signal(problem, config.quota.K, config.quota.L, fee,
                                  budget=config.solver.tree_budget).accepted
    if problem.has_dynamics:
        return solve_markov(problem, fee, max_signals=config.solver.max_signals,
                            budget=config.solver.tree_budget).accepted
    return evaluate_fee(problem, fee, budget=config.solver.tree_budget).accepted


def cmd_compare(args):
    if len(args.config) != 2:
        raise ConfigError("--config", "compare needs exactly two configurations")
    (cfg_s, S, text_s), (cfg_t, T, text_t) = (_load(p) for p in args.config)
    if S.horizon != T.horizon:
        raise ConfigError("horizon", "both configurations must share the horizon")
    verdict = blackwell_compare(S.info, T.info)
    print(f"blackwell={verdict.relation.value}")
    sol_s, sol_t = _solve(S, cfg_s), _solve(T, cfg_t)
    rows = []
    for (period, ls), (_, lt) in zip(_layers(S, sol_s), _layers(T, sol_t)):
        diff = None if ls.threshold is None or lt.threshold is None else ls.threshold - lt.threshold
        rows.append((period, ls.threshold, lt.threshold, diff))
    table = table_text(["period", "threshold_S", "threshold_T", "difference"], rows)
    sys.stdout.write(table)
    P = exact_distribution(S, sol_s, n_max=cfg_s.solver.n_max, budget=cfg_s.solver.tree_budget)
    Q = exact_distribution(T, sol_t, n_max=cfg_t.solver.n_max, budget=cfg_t.solver.tree_budget)
    print(f"fosd={fosd_check(P, Q).value}")
    print(f"ssd={ssd_check(P, Q).value}")
    out = _prepare_out(args.out)
    if out is not None:
        (out / "thresholds.csv").write_text(table, encoding="utf-8")
        write_metadata(out, "compare", [text_s, text_t], None, ["thresholds.csv"])
    return EXIT_OK


def cmd_stopping_time(args):
    config, problem, text = _load(args.config)
    solution = _solve(problem, config)
    n_max = config.solver.n_max
    budget = config.solver.tree_budget
    exact = exact_distribution(problem, solution, n_max=n_max, budget=budget)
    header = ["period", "pmf_exact", "cdf_exact"]
    columns = [exact.pmf, exact.cdf()]
    seed = config.solver.seed if args.seed is None else args.seed
    if args.trials:
        mc = simulate_distribution(problem, solution, args.trials, seed, n_max=n_max)
        header += ["pmf_monte_carlo", "cdf_monte_carlo", "cdf_se"]
        columns += [mc.pmf, mc.cdf(), mc.standard_errors()]
    rows = [(n, *(c[n] for c in columns)) for n in range(exact.pmf.size)]
    out = _prepare_out(args.out)
    written = []
    _emit(out, "stopping_time.csv", header, rows, written)
    summary = [("never_mass_exact", exact.never_mass), ("mean_exact", exact.mean())]
    _emit(out, "stopping_time_summary.csv", ["quantity", "value"], summary, written)
    if out is not None:
        write_metadata(out, "stopping-time", [text], seed if args.trials else None, written)
    return EXIT_OK


def cmd_reproduce(args):
    out = Path(args.out or f"reproduce_{args.example}")
    checks = reproduce(args.example, out)
    for check in checks:
        print(check.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_REPRODUCE


def _prepare_out(out):
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def build_parser():
    parser = argparse.ArgumentParser(prog="stopval", description="Bayesian stopping problems with costly information.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a problem and write value, threshold and policy tables")
    solve.add_argument("--config", required=True)
    solve.add_argument("--out", help="output directory (tables go to stdout when omitted)")
    solve.add_argument("--tol", type=float)
    solve.set_defaults(handler=cmd_solve)

    voi = sub.add_parser("value-of-info", help="print phi, pi, V0 and the fee verdict")
    voi.add_argument("--config", required=True)
    voi.set_defaults(handler=cmd_value_of_info)

    compare = sub.add_parser("compare", help="compare two information structures")
    compare.add_argument("--config", required=True, action="append", help="give twice: S then T")
    compare.add_argument("--out")
    compare.set_defaults(handler=cmd_compare)

    st = sub.add_parser("stopping-time", help="exact (and optionally simulated) stopping-time distribution")
    st.add_argument("--config", required=True)
    st.add_argument("--out")
    st.add_argument("--trials", type=int, default=0)
    st.add_argument("--seed", type=int)
    st.set_defaults(handler=cmd_stopping_time)

    rep = sub.add_parser("reproduce", help="run a canned worked example")
    rep.add_argument("example", choices=sorted(EXAMPLES))
    rep.add_argument("--out")
    rep.set_defaults(handler=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StopvalError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
