"""Small linear programs (garbling feasibility, alpha-vector witness tests) via HiGHS."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

FEASIBILITY_TOL = 1e-9
_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
_STATUS = {0: "optimal", 2: "infeasible", 3: "unbounded"}


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[np.ndarray]
    fun: float


def _solve(c, **kwargs):
    res = linprog(c, method="highs", options=_OPTIONS, **kwargs)
    status = _STATUS.get(res.status)
    if status is None:
        raise RuntimeError(f"linear program failed: {res.message}")
    if status != "optimal":
        return LPResult(status, None, np.nan if status == "infeasible" else -np.inf)
    return LPResult(status, res.x, float(res.fun))


def solve_standard_form(c, A_eq, b_eq):
    """Minimise ``c @ x`` subject to ``A_eq @ x = b_eq`` and ``x >= 0``."""
    return _solve(np.asarray(c, dtype=float), A_eq=A_eq, b_eq=b_eq, bounds=(0, None))


def max_margin(alpha, others):
    """Largest ``t`` such that some belief ``mu`` has ``mu @ (alpha - beta) >= t``
    for every ``beta`` in `others`.

    Returns ``(t, mu)``. With no competitors the margin is ``+inf``.
    """
    alpha = np.asarray(alpha, dtype=float)
    others = np.asarray(others, dtype=float).reshape(-1, alpha.size)
    m = alpha.size
    if others.shape[0] == 0:
        return np.inf, np.full(m, 1.0 / m)
    # variables (mu, t): maximise t with t - mu @ (alpha - beta) <= 0 and mu in the simplex
    c = np.zeros(m + 1)
    c[m] = -1.0
    A_ub = np.hstack([others - alpha, np.ones((others.shape[0], 1))])
    A_eq = np.append(np.ones(m), 0.0)[None, :]
    res = _solve(c, A_ub=A_ub, b_ub=np.zeros(others.shape[0]), A_eq=A_eq, b_eq=[1.0],
                 bounds=[(0, None)] * m + [(None, None)])
    if res.status != "optimal":
        raise RuntimeError(f"witness LP ended with status {res.status}")
    return -res.fun, res.x[:m]
