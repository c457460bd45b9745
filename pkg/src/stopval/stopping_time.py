"""Distributions of the stopping period under a solved policy.

Exact distributions come from a forward sweep over distinct beliefs;
Monte Carlo estimates simulate states and signals with seeded, chunked
streams; closed forms cover the symmetric random walk and the Gaussian
log-likelihood walk.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidSetup, NoCrossing, TreeTooLarge, ValidationError
from .solver import ACQUIRE, WAIT, FiniteSolution, InfiniteSolution
from .tree import DEFAULT_TREE_BUDGET

DEFAULT_N_MAX = 200
CHUNK_SIZE = 1 << 16
_MERGE_DECIMALS = 12


@dataclass(frozen=True, eq=False)
class StoppingTimeDist:
    """``pmf[n]`` is the probability of stopping in period n, ``n = 0..len-1``.

    `never_mass` holds whatever is not stopped within the grid (truncation
    remainder, or walks that never stop); comparisons treat it as mass at
    infinity. `conditional[theta, n]` is the pmf given the initial state.
    """

    pmf: np.ndarray
    never_mass: float
    source: str  # "exact", "monte_carlo" or "closed_form"
    conditional: Optional[np.ndarray] = None
    trials: Optional[int] = None
    seed: Optional[int] = None

    @property
    def periods(self):
        return np.arange(self.pmf.size)

    def cdf(self):
        return np.cumsum(self.pmf)

    @property
    def total(self):
        return float(self.pmf.sum() + self.never_mass)

    def mean(self, tol=1e-12):
        """Expected stopping period (``inf`` when mass escapes the grid)."""
        if self.never_mass > tol:
            return math.inf
        return float(self.periods @ self.pmf)

    def standard_errors(self):
        """Binomial standard errors of the CDF (Monte Carlo estimates only)."""
        if not self.trials:
            raise ValidationError("standard errors need a Monte Carlo distribution")
        F = self.cdf()
        return np.sqrt(F * (1.0 - F) / self.trials)


def _layer_source(policy):
    """``(layer_at(n), horizon)`` for a finite or infinite solution."""
    if isinstance(policy, FiniteSolution):
        return policy.policy, policy.horizon
    if isinstance(policy, InfiniteSolution):
        return (lambda n: policy.layer), None
    raise ValidationError("policy must be a solved finite or infinite problem")


def _limit(horizon, n_max):
    if n_max is None:
        return horizon if horizon is not None else DEFAULT_N_MAX
    if n_max < 0:
        raise ValidationError("n_max must be non-negative")
    return n_max if horizon is None else min(n_max, horizon)


def exact_distribution(problem, policy, n_max=None, budget=DEFAULT_TREE_BUDGET):
    """Forward sweep of joint (initial state, current state) mass over distinct beliefs."""
    layer_at, horizon = _layer_source(policy)
    limit = _limit(horizon, n_max)
    m = problem.state_count
    lik = problem.info.likelihoods
    tau = problem.transition_matrix
    prior = problem.prior
    mass = np.diag(prior)[None, :, :]  # (nodes, initial, current)
    stopped = np.zeros((m, limit + 1))
    for n in range(limit + 1):
        joint = mass.sum(axis=1)
        weight = joint.sum(axis=1)
        beliefs = joint / weight[:, None]
        codes = layer_at(n).choices(beliefs)
        halt = (codes != ACQUIRE) & (codes != WAIT)
        stopped[:, n] = mass[halt].sum(axis=(0, 2))
        if n == limit:
            mass = mass[~halt]
            break
        pushed = mass[~halt] @ tau
        go = codes[~halt]
        children = [pushed[go == WAIT]]
        acquiring = pushed[go == ACQUIRE]
        for s in range(lik.shape[1]):
            children.append(acquiring * lik[:, s][None, None, :])
        mass = np.concatenate(children, axis=0)
        mass = mass[mass.sum(axis=(1, 2)) > 0.0]
        if mass.shape[0] == 0:
            stopped = stopped[:, : n + 1]
            break
        # nodes sharing a belief share a future: merge them
        joint = mass.sum(axis=1)
        keys = np.round(joint / joint.sum(axis=1, keepdims=True), _MERGE_DECIMALS)
        keys, inverse = np.unique(keys, axis=0, return_inverse=True)
        merged = np.zeros((keys.shape[0], m, m))
        np.add.at(merged, inverse.reshape(-1), mass)
        mass = merged
        if mass.shape[0] > budget:
            raise TreeTooLarge(f"{mass.shape[0]} distinct beliefs exceed the budget of {budget}")
    pmf = stopped.sum(axis=0)
    never = float(mass.sum()) if mass.size else 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        conditional = np.where(prior[:, None] > 0, stopped / prior[:, None], 0.0)
    return StoppingTimeDist(pmf, max(0.0, never), "exact", conditional)


def _thread_count(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("STOPVAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"STOPVAL_THREADS must be an integer, got {env!r}") from None
    return 1


def _categorical(rng, cumulative):
    """One draw per row of a matrix of cumulative probabilities."""
    u = rng.random(cumulative.shape[0])
    return np.minimum((u[:, None] >= cumulative[:, :-1]).sum(axis=1), cumulative.shape[1] - 1)


def _chunk_sizes(trials, chunk_size):
    full, rest = divmod(trials, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _run_chunks(worker, seed, trials, chunk_size, threads):
    sizes = _chunk_sizes(trials, chunk_size)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(streams, sizes))
    workers = _thread_count(threads)
    if workers == 1 or len(jobs) == 1:
        results = [worker(stream, size) for stream, size in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: worker(*job), jobs))
    return results


def simulate_distribution(problem, policy, trials, seed, n_max=None, chunk_size=CHUNK_SIZE, threads=None):
    """Monte Carlo stopping-period distribution.

    Trials are split into fixed-size chunks, each with its own stream spawned
    from `seed`, so the counts do not depend on the number of threads.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    layer_at, horizon = _layer_source(policy)
    limit = _limit(horizon, n_max)
    m = problem.state_count
    lik_cum = np.cumsum(problem.info.likelihoods, axis=1)
    tau = problem.transition_matrix
    tau_cum = np.cumsum(tau, axis=1)
    dynamic = problem.has_dynamics
    prior = problem.prior
    lik_t = problem.info.likelihoods.T

    def worker(stream, size):
        rng = np.random.default_rng(stream)
        initial = _categorical(rng, np.broadcast_to(np.cumsum(prior), (size, m)))
        state = initial.copy()
        beliefs = np.broadcast_to(prior, (size, m)).copy()
        when = np.full(size, -1)
        live = np.arange(size)
        for n in range(limit + 1):
            if live.size == 0:
                break
            codes = layer_at(n).choices(beliefs[live])
            halt = (codes != ACQUIRE) & (codes != WAIT)
            when[live[halt]] = n
            if n == limit:
                break
            codes = codes[~halt]
            live = live[~halt]
            if dynamic:
                state[live] = _categorical(rng, tau_cum[state[live]])
            beliefs[live] = beliefs[live] @ tau
            buying = live[codes == ACQUIRE]
            signals = _categorical(rng, lik_cum[state[buying]])
            post = beliefs[buying] * lik_t[signals]
            beliefs[buying] = post / post.sum(axis=1, keepdims=True)
        counts = np.zeros((m, limit + 1), dtype=np.int64)
        done = when >= 0
        np.add.at(counts, (initial[done], when[done]), 1)
        per_state = np.bincount(initial, minlength=m)
        return counts, per_state

    results = _run_chunks(worker, seed, trials, chunk_size, threads)
    counts = sum(r[0] for r in results)
    per_state = sum(r[1] for r in results)
    pmf = counts.sum(axis=0) / trials
    never = 1.0 - counts.sum() / trials
    with np.errstate(invalid="ignore", divide="ignore"):
        conditional = np.where(per_state[:, None] > 0, counts / np.maximum(per_state[:, None], 1), 0.0)
    return StoppingTimeDist(pmf, max(0.0, float(never)), "monte_carlo", conditional, trials, seed)


def random_walk_hitting_pmf(p, n_terms):
    """First-passage probabilities of a +-1 walk to level +1, at periods ``2n-1``.

    Returns ``P(2n-1)`` for ``n = 1..n_terms``; the walk steps up with
    probability `p`. Even periods carry no mass.
    """
    if not 0.0 < p < 1.0:
        raise ValidationError("p must lie strictly between 0 and 1")
    n = np.arange(1, int(n_terms) + 1, dtype=float)
    # ((2n-3)!!/n!) 2^(n-1) is the Catalan number C_{n-1} = (2n-2)! / ((n-1)! n!)
    log_catalan = np.array([math.lgamma(2 * k - 1) - math.lgamma(k) - math.lgamma(k + 1) for k in n])
    return np.exp(log_catalan + n * math.log(p) + (n - 1) * math.log1p(-p))


def hitting_time_distribution(p, n_max):
    """Closed-form first-passage distribution on periods ``0..n_max``."""
    pmf = np.zeros(n_max + 1)
    terms = (n_max + 1) // 2
    if terms:
        pmf[1::2] = random_walk_hitting_pmf(p, terms)[: pmf[1::2].size]
    return StoppingTimeDist(pmf, max(0.0, 1.0 - float(pmf.sum())), "closed_form")


def simulate_hitting_time(p, trials, seed, n_max, chunk_size=CHUNK_SIZE, threads=None):
    """Monte Carlo first-passage distribution of the +-1 walk to level +1."""
    if not 0.0 < p < 1.0:
        raise ValidationError("p must lie strictly between 0 and 1")

    def worker(stream, size):
        rng = np.random.default_rng(stream)
        steps = np.where(rng.random((size, n_max)) < p, 1, -1)
        paths = np.cumsum(steps, axis=1)
        hit = paths >= 1
        first = np.where(hit.any(axis=1), hit.argmax(axis=1) + 1, -1)
        return np.bincount(first[first > 0], minlength=n_max + 1)[: n_max + 1]

    counts = sum(_run_chunks(worker, seed, trials, chunk_size, threads))
    pmf = counts / trials
    return StoppingTimeDist(pmf, max(0.0, 1.0 - float(pmf.sum())), "monte_carlo", None, trials, seed)


class Dominance(str, Enum):
    P_DOMINATES = "P_dominates"
    Q_DOMINATES = "Q_dominates"
    EQUAL = "equal"
    NEITHER = "neither"


def _aligned_cdfs(P, Q):
    size = max(P.pmf.size, Q.pmf.size)
    cdfs = []
    for dist in (P, Q):
        pmf = np.zeros(size)
        pmf[: dist.pmf.size] = dist.pmf
        cdfs.append(np.cumsum(pmf))
    return cdfs


def _verdict(diff, tol):
    """Dominance of P over Q when ``diff = f(P) - f(Q)`` should be <= 0."""
    if np.all(np.abs(diff) <= tol):
        return Dominance.EQUAL
    if np.all(diff <= tol):
        return Dominance.P_DOMINATES
    if np.all(diff >= -tol):
        return Dominance.Q_DOMINATES
    return Dominance.NEITHER


def fosd_check(P, Q, tol=1e-9):
    """First-order dominance in the sense of stopping later: ``CDF_P <= CDF_Q`` everywhere."""
    F, G = _aligned_cdfs(P, Q)
    return _verdict(F - G, tol)


def ssd_check(P, Q, tol=1e-9):
    """Second-order dominance via integrated CDFs: ``sum_{j<x} CDF_P(j) <= sum_{j<x} CDF_Q(j)``.

    CDFs are step functions, so checking integer ``x`` is exact on the grid;
    past the grid the integrals drift apart at the rate of the final CDF gap,
    which is checked as well.
    """
    F, G = _aligned_cdfs(P, Q)
    integrated = np.cumsum(F - G)
    return _verdict(np.concatenate([integrated, [F[-1] - G[-1]]]), tol)


@dataclass(frozen=True)
class GaussianSetup:
    """Two states with Gaussian signals ``N(theta, sigma^2)``, waiting until the
    belief in the high state reaches `mu_bar`."""

    theta_high: float
    theta_low: float
    sigma: float
    mu0: float
    mu_bar: float

    def __post_init__(self):
        if not self.theta_high > self.theta_low:
            raise InvalidSetup("theta_high must exceed theta_low")
        if not self.sigma > 0:
            raise InvalidSetup("sigma must be positive")
        for name in ("mu0", "mu_bar"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidSetup(f"{name} must lie strictly between 0 and 1")

    @property
    def drift(self):
        """Mean log-likelihood increment under the high state."""
        return (self.theta_high - self.theta_low) ** 2 / (2.0 * self.sigma ** 2)

    @property
    def increment_variance(self):
        return (self.theta_high - self.theta_low) ** 2 / self.sigma ** 2

    @property
    def r0(self):
        return math.log(self.mu0 / (1.0 - self.mu0))

    @property
    def r_bar(self):
        return math.log(self.mu_bar / (1.0 - self.mu_bar))


@dataclass(frozen=True)
class WaldEstimate:
    trials: int
    seed: int
    mean_time: float
    time_se: float
    mean_stopped_r: float
    stopped_r_se: float
    wald_value: float  # the identity evaluated at the estimated stopped log-odds


def _zero_overshoot_time(setup):
    if setup.mu0 >= setup.mu_bar:
        return 0.0
    return (setup.r_bar - setup.r0) / setup.drift


def simulate_wald(setup, trials, seed, chunk_size=CHUNK_SIZE, threads=None, max_steps=1_000_000):
    """Simulate the log-odds walk under the high state until it reaches ``r_bar``."""
    if setup.mu0 >= setup.mu_bar:
        raise InvalidSetup("the prior already reaches the threshold")
    if trials < 2:
        raise ValidationError("at least two trials are needed for standard errors")
    drift, sd = setup.drift, math.sqrt(setup.increment_variance)
    r0, r_bar = setup.r0, setup.r_bar

    def worker(stream, size):
        rng = np.random.default_rng(stream)
        r = np.full(size, r0)
        steps = np.zeros(size, dtype=np.int64)
        live = np.arange(size)
        for _ in range(max_steps):
            if live.size == 0:
                break
            r[live] += rng.normal(drift, sd, live.size)
            steps[live] += 1
            live = live[r[live] < r_bar]
        if live.size:
            raise ValidationError("some walks did not reach the threshold within max_steps")
        return steps, r

    results = _run_chunks(worker, seed, trials, chunk_size, threads)
    steps = np.concatenate([s for s, _ in results]).astype(float)
    stopped = np.concatenate([r for _, r in results])
    mean_r = float(stopped.mean())
    return WaldEstimate(
        trials,
        seed,
        float(steps.mean()),
        float(steps.std(ddof=1) / math.sqrt(trials)),
        mean_r,
        float(stopped.std(ddof=1) / math.sqrt(trials)),
        (mean_r - r0) / drift,
    )


def wald_expected_stopping(setup, mode="zero_overshoot", trials=100_000, seed=0):
    """Expected stopping period under the high state via Wald's identity.

    ``zero_overshoot`` takes the stopped log-odds to equal ``r_bar``;
    ``monte_carlo`` estimates them by simulation.
    """
    if setup.mu0 >= setup.mu_bar:
        raise InvalidSetup("the prior already reaches the threshold, so the stopping time is 0")
    if mode == "zero_overshoot":
        return _zero_overshoot_time(setup)
    if mode == "monte_carlo":
        return simulate_wald(setup, trials, seed).wald_value
    raise ValidationError(f"unknown mode {mode!r}")


def crossing_prior(setup_s, setup_t, tol=1e-4, scan_points=2001):
    """Prior at which the zero-overshoot expected stopping times under S and T swap order.

    Below it ``E(eta_T) > E(eta_S)``, above it (up to ``mu_bar_S``) the
    reverse. Raises NoCrossing when the difference has no sign change, or more
    than one, on ``(0, mu_bar_S)``.
    """
    if (setup_s.theta_high, setup_s.theta_low) != (setup_t.theta_high, setup_t.theta_low):
        raise ValidationError("both setups must share the state values")
    if setup_s.sigma > setup_t.sigma or setup_s.mu_bar < setup_t.mu_bar:
        raise ValidationError("expected sigma_S <= sigma_T and mu_bar_S >= mu_bar_T")

    def gap(mu0):
        s = GaussianSetup(setup_s.theta_high, setup_s.theta_low, setup_s.sigma, mu0, setup_s.mu_bar)
        t = GaussianSetup(setup_t.theta_high, setup_t.theta_low, setup_t.sigma, mu0, setup_t.mu_bar)
        return _zero_overshoot_time(t) - _zero_overshoot_time(s)

    grid = np.linspace(0.0, setup_s.mu_bar, scan_points + 2)[1:-1]
    values = np.array([gap(x) for x in grid])
    signs = np.sign(np.where(np.abs(values) <= 1e-12, 0.0, values))
    nonzero = signs[signs != 0]
    changes = int(np.count_nonzero(np.diff(nonzero)))
    if changes == 0:
        raise NoCrossing("the expected stopping times never change order below mu_bar_S")
    if changes > 1:
        raise NoCrossing(f"the expected stopping times change order {changes} times")
    if nonzero[0] < 0:
        raise NoCrossing("E(eta_T) < E(eta_S) already at pessimistic priors")
    lo_i = int(np.nonzero(signs > 0)[0][-1])
    hi_i = lo_i + 1 + int(np.nonzero(signs[lo_i + 1:] != 0)[0][0])
    lo, hi = grid[lo_i], grid[hi_i]
    # bisect on the sign change; the gap is continuous in the prior
    while hi - lo > tol * 1e-2:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
