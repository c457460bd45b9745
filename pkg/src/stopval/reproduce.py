"""Canned worked examples with numeric assertions."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .belief import Relation, blackwell_compare
from .config import ProblemConfig
from .fee_design import evaluate_fee, supremum_check, value_of_information
from .fees import Flat, Upfront
from .markov import solve_markov
from .problem import stopping_payoff
from .report import write_table
from .solver import solve_finite, solve_infinite
from .stopping_time import Dominance, exact_distribution, fosd_check, ssd_check

_BINARY = {"states": ["high", "low"]}
_INVEST = {"labels": ["invest"], "payoffs": [[6.0, -8.0]]}

EXAMPLE_CONFIGS = {
    "example1": {
        "postpone": {
            **_BINARY,
            "actions": {"labels": ["invest"], "payoffs": [[10.0, -10.0]]},
            "include_outside_option": True,
            "discount": 1.0,
            "horizon": 2,
            "prior": [0.1, 0.9],
            "info_structure": [[0.55, 0.45], [0.45, 0.55]],
            "transition": [[0.6, 0.4], [0.4, 0.6]],
            "solver": {"max_signals": 1},
        },
    },
    "example2": {
        "patient": {
            **_BINARY,
            "actions": _INVEST,
            "discount": 0.9,
            "horizon": 2,
            "prior": [0.5, 0.5],
            "info_structure": [[0.7, 0.3], [0.3, 0.7]],
        },
        "impatient": {
            **_BINARY,
            "actions": _INVEST,
            "discount": 0.7,
            "horizon": 2,
            "prior": [0.5, 0.5],
            "info_structure": [[0.7, 0.3], [0.3, 0.7]],
        },
    },
    "example4": {
        "S": {
            **_BINARY,
            "actions": {"labels": ["invest"], "payoffs": [[100.0, -100.0]]},
            "discount": 0.9,
            "horizon": "inf",
            "prior": [0.57, 0.43],
            "info_structure": [[0.6, 0.4], [0.4, 0.6]],
            "solver": {"n_max": 200},
        },
        "T": {
            **_BINARY,
            "actions": {"labels": ["invest"], "payoffs": [[100.0, -100.0]]},
            "discount": 0.9,
            "horizon": "inf",
            "prior": [0.57, 0.43],
            "info_structure": [[0.55, 0.45], [0.45, 0.55]],
            "solver": {"n_max": 200},
        },
    },
    "example5": {
        "S": {
            **_BINARY,
            "actions": _INVEST,
            "discount": 0.85,
            "horizon": 5,
            "prior": [0.5, 0.5],
            "info_structure": [[0.8, 0.2], [0.5, 0.5]],
        },
        "T": {
            **_BINARY,
            "actions": _INVEST,
            "discount": 0.85,
            "horizon": 5,
            "prior": [0.5, 0.5],
            "info_structure": [[0.6, 0.4], [0.3, 0.7]],
        },
    },
}

TABLE1_S = (0.7376, 0.7335, 0.7335, 0.7201, 0.7055, 0.5714)
TABLE1_T = (0.7312, 0.7263, 0.7225, 0.7142, 0.6697, 0.5714)
# printed from the last period back to period 0
TABLE1_DIFF = (0.0, 0.0358, 0.0059, 0.0110, 0.0072, 0.0064)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def configs(example):
    return {name: ProblemConfig.model_validate(data) for name, data in EXAMPLE_CONFIGS[example].items()}


def _close(name, got, want, tol):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    err = float(np.max(np.abs(got - want)))
    return Check(name, bool(err <= tol), f"max error {err:.3g} (tol {tol:g})")


def _example1(out):
    config = configs("example1")["postpone"]
    problem = config.to_problem()
    sol = solve_markov(problem, max_signals=config.solver.max_signals)
    # acquire first: period-1 posteriors, then drift to period 2
    acquire_first = [sol.node((0,)).belief, sol.node((1,)).belief,
                     sol.node((0, None)).belief, sol.node((1, None)).belief]
    # wait first: mu0 tau, mu0 tau^2, then period-2 posteriors
    wait_first = [sol.node((None,)).belief, sol.node((None,)).belief @ problem.transition_matrix,
                  sol.node((None, 1)).belief, sol.node((None, 0)).belief]
    beliefs = np.array(acquire_first + wait_first)
    expected = [(0.47, 0.53), (0.372, 0.628), (0.494, 0.506), (0.474, 0.526),
                (0.42, 0.58), (0.484, 0.516), (0.434, 0.566), (0.534, 0.466)]
    probs = [sol.node((None, 1)).reach, sol.node((None, 0)).reach]
    postpone, acquire = sol.root.options["wait"], sol.root.options["acquire"]
    rows = []
    for path, node in sorted(sol.nodes.items(), key=lambda kv: (len(kv[0]), str(kv[0]))):
        label = "/".join("wait" if s is None else f"s{s + 1}" for s in path) or "root"
        rows.append((label, node.period, *node.belief, node.reach, node.decision.kind, node.value))
    write_table(out / "example1_tree.csv",
                ["path", "period", "mu_high", "mu_low", "reach", "decision", "value"], rows)
    return [
        _close("example1 beliefs along both strategies", beliefs, expected, 5e-3),
        _close("example1 period-2 signal probabilities", probs, (0.502, 0.498), 1e-3),
        Check("example1 postponement beats acquiring first", postpone > acquire,
              f"wait-then-acquire {postpone:.10g} vs acquire-first {acquire:.10g}"),
    ]


def _example2(out):
    cfgs = configs("example2")
    problem = cfgs["patient"].to_problem()
    impatient = cfgs["impatient"].to_problem()
    patient_sol = solve_finite(problem)
    impatient_sol = solve_finite(impatient)
    phi = value_of_information(problem)
    upfront = evaluate_fee(problem, Upfront(phi - 1e-6))
    flat = evaluate_fee(problem, Flat(0.1))
    audit = supremum_check(problem, trials=1000, seed=0)
    pi0, _ = stopping_payoff(problem.prior, problem)
    prohibitive = evaluate_fee(problem, Flat(1e6))
    P = exact_distribution(problem, patient_sol)
    Q = exact_distribution(impatient, impatient_sol)
    verdict = fosd_check(P, Q)
    rows = [(n, P.pmf[n], Q.pmf[n], P.cdf()[n], Q.cdf()[n]) for n in range(P.pmf.size)]
    write_table(out / "example2_stopping_times.csv",
                ["period", "pmf_delta_0.9", "pmf_delta_0.7", "cdf_delta_0.9", "cdf_delta_0.7"], rows)
    thresholds = patient_sol.thresholds
    write_table(out / "example2_thresholds.csv", ["period", "threshold_delta_0.9", "threshold_delta_0.7"],
                [(n, thresholds[n], impatient_sol.thresholds[n]) for n in range(len(thresholds))])
    return [
        Check("example2 period-0 threshold above myopic break-even", thresholds[0] > 8 / 14,
              f"{thresholds[0]:.10g} > {8 / 14:.10g}"),
        Check("example2 upfront phi - 1e-6 accepted and extracts phi",
              upfront.accepted and abs(upfront.expected_total_fee - phi) <= 1e-6,
              f"phi {phi:.10g}, rho {upfront.expected_total_fee:.10g}"),
        Check("example2 small flat fee extracts less than phi",
              flat.expected_total_fee < phi, f"rho {flat.expected_total_fee:.10g} < phi {phi:.10g}"),
        Check("example2 prohibitive fee is declined", (not prohibitive.accepted) and prohibitive.dm_value == pi0,
              f"value {prohibitive.dm_value:.10g}"),
        Check("example2 1000 random schemes never exceed phi", audit.max_fee <= phi + 1e-9,
              f"max rho {audit.max_fee:.10g}, residual {audit.max_decomposition_residual:.3g}"),
        Check("example2 patient stopping time dominates", verdict is Dominance.P_DOMINATES, verdict.value),
    ]


def _example4(out):
    cfgs = configs("example4")
    solved, dists = {}, {}
    for name, cfg in cfgs.items():
        problem = cfg.to_problem()
        solved[name] = solve_infinite(problem, tol=cfg.solver.tol)
        dists[name] = exact_distribution(problem, solved[name], n_max=cfg.solver.n_max)
    S, T = dists["S"], dists["T"]
    size = max(S.pmf.size, T.pmf.size)
    rows = [(n, S.pmf[n] if n < S.pmf.size else 0.0, T.pmf[n] if n < T.pmf.size else 0.0) for n in range(size)]
    write_table(out / "example4_stopping_times.csv", ["period", "pmf_S", "pmf_T"], rows)
    write_table(out / "example4_thresholds.csv", ["structure", "threshold"],
                [(name, sol.threshold) for name, sol in solved.items()])
    diff = S.pmf[1] - T.pmf[1]
    fosd, ssd = fosd_check(S, T), ssd_check(S, T)
    return [
        _close("example4 threshold under S", solved["S"].threshold, 0.66, 0.01),
        _close("example4 threshold under T", solved["T"].threshold, 0.59, 0.01),
        _close("example4 P_S(1)", S.pmf[1], 0.514, 1e-9),
        _close("example4 P_S(1) - P_T(1)", diff, 0.007, 1e-9),
        Check("example4 no first-order dominance", fosd is Dominance.NEITHER, fosd.value),
        Check("example4 no second-order dominance", ssd is Dominance.NEITHER, ssd.value),
    ]


def _example5(out):
    cfgs = configs("example5")
    S, T = cfgs["S"].to_problem(), cfgs["T"].to_problem()
    th_s = solve_finite(S).thresholds
    th_t = solve_finite(T).thresholds
    diff = [th_s[n] - th_t[n] for n in range(len(th_s))][::-1]
    write_table(out / "example5_table1.csv", ["period", "threshold_S", "threshold_T", "difference"],
                [(n, th_s[n], th_t[n], th_s[n] - th_t[n]) for n in range(len(th_s))])
    verdict = blackwell_compare(S.info, T.info).relation
    return [
        _close("example5 thresholds under S", th_s, TABLE1_S, 5e-4),
        _close("example5 thresholds under T", th_t, TABLE1_T, 5e-4),
        _close("example5 threshold differences", diff, TABLE1_DIFF, 1e-4),
        Check("example5 S and T are incomparable", verdict is Relation.INCOMPARABLE, verdict.value),
    ]


EXAMPLES = {"example1": _example1, "example2": _example2, "example4": _example4, "example5": _example5}


def reproduce(example, out_dir):
    """Run one canned example, write its tables into `out_dir` and return the checks."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, cfg in configs(example).items():
        (out / f"{example}_{name}.json").write_text(cfg.dumps(), encoding="utf-8")
    return EXAMPLES[example](out)
