"""Piecewise-linear convex value functions stored as sets of alpha vectors."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lp import max_margin

# alphas whose best margin over the rest is at most this are dropped
PRUNE_EPS = 1e-13
_DEDUP_DECIMALS = 13


@dataclass(frozen=True, eq=False)
class PwlcValue:
    """``V(mu) = max_i alphas[i] @ mu``.

    Each alpha carries a tag naming the choice that induces it:
    ``("stop", action)``, ``("acquire",)`` or ``("exit",)`` for the
    outside payoff collected by waiting past the horizon.
    """

    alphas: np.ndarray
    tags: tuple

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=float, ndmin=2)
        if len(self.tags) != alphas.shape[0]:
            raise ValueError("one tag per alpha vector is required")
        alphas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "tags", tuple(self.tags))

    @property
    def state_count(self):
        return self.alphas.shape[1]

    def __len__(self):
        return self.alphas.shape[0]

    def __call__(self, mu):
        return value_at(self, mu)

    def best(self, mu):
        """Value at `mu` and the tag of the maximising alpha."""
        scores = self.alphas @ np.asarray(mu, dtype=float)
        i = int(np.argmax(scores))
        return float(scores[i]), self.tags[i]

    def evaluate(self, beliefs):
        """Values at each row of a belief matrix."""
        beliefs = np.asarray(beliefs, dtype=float)
        if self.state_count == 2 and len(self) > 8 and beliefs.ndim == 2:
            a, xs = self._envelope()
            return _evaluate_envelope(a, xs, beliefs[:, 0])
        return np.max(beliefs @ self.alphas.T, axis=-1)

    def _envelope(self):
        cached = self.__dict__.get("_cached_envelope")
        if cached is None:
            cached = _ordered_envelope(prune(self))
            object.__setattr__(self, "_cached_envelope", cached)
        return cached

    def __repr__(self):
        return f"PwlcValue({len(self)} alphas)"


def value_at(V, mu):
    """Maximum over alpha vectors of ``mu @ alpha``."""
    return float(np.max(V.alphas @ np.asarray(mu, dtype=float)))


def constant(value, state_count, tag=("exit",)):
    return PwlcValue(np.full((1, state_count), float(value)), (tag,))


def union(*values):
    alphas = np.vstack([v.alphas for v in values])
    tags = tuple(t for v in values for t in v.tags)
    return PwlcValue(alphas, tags)


def _dedupe(alphas, tags):
    """Drop repeated alphas, keeping the first occurrence (stop tags come first)."""
    keys = np.round(alphas, _DEDUP_DECIMALS)
    _, first = np.unique(keys, axis=0, return_index=True)
    first = np.sort(first)
    return alphas[first], [tags[i] for i in first]


_MAX_VECTOR_PASSES = 64


def _hull_order(intercept, slope):
    """Indices of the lines forming the upper envelope over the whole real line."""
    order = np.lexsort((-intercept, slope))
    a = slope[order]
    # equal slopes: the highest intercept sorts first and wins
    order = order[np.concatenate([[True], np.diff(a) > 0])]
    b, a = intercept[order], slope[order]
    idx = np.arange(order.size)
    # a middle line is redundant iff its neighbours cross no later than it
    # takes over; removing non-adjacent redundant lines in passes converges
    for _ in range(_MAX_VECTOR_PASSES):
        if idx.size < 3:
            return order[idx]
        bi, ai = b[idx], a[idx]
        xs = (bi[:-1] - bi[1:]) / (ai[1:] - ai[:-1])
        bad = np.nonzero(xs[:-1] >= xs[1:])[0] + 1
        if bad.size == 0:
            return order[idx]
        # never drop two neighbours at once
        bad = bad[np.concatenate([[True], np.diff(bad) > 1])]
        idx = np.delete(idx, bad)
    return order[_hull_loop(b.tolist(), a.tolist())]


def _hull_loop(b, a):
    hull = []
    for t in range(len(a)):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            x_jk = (b[j] - b[k]) / (a[k] - a[j])
            x_jt = (b[j] - b[t]) / (a[t] - a[j])
            if x_jt <= x_jk:
                hull.pop()
            else:
                break
        hull.append(t)
    return hull


def _envelope_margins(b, a):
    """Best lead of each envelope line over its neighbours on [0, 1]."""
    n = len(b)
    xs = (b[:-1] - b[1:]) / (a[1:] - a[:-1])
    lo = np.concatenate([[0.0], np.clip(xs, 0.0, 1.0)])
    hi = np.concatenate([np.clip(xs, 0.0, 1.0), [1.0]])
    b_left = np.concatenate([[np.nan], b[:-1]])
    a_left = np.concatenate([[np.nan], a[:-1]])
    b_right = np.concatenate([b[1:], [np.nan]])
    a_right = np.concatenate([a[1:], [np.nan]])
    with np.errstate(invalid="ignore", divide="ignore"):
        cross = (b_left - b_right) / (a_right - a_left)
    cross = np.where(np.isfinite(cross), np.clip(cross, lo, hi), lo)

    def gap(x):
        left = np.where(np.isnan(b_left), -np.inf, b_left + a_left * x)
        right = np.where(np.isnan(b_right), -np.inf, b_right + a_right * x)
        return b + a * x - np.maximum(left, right)

    margins = np.maximum(np.maximum(gap(lo), gap(hi)), gap(cross))
    margins[hi <= lo] = -np.inf
    if n == 1:
        margins[:] = np.inf
    return margins


def _envelope_two_state(alphas, tags):
    """Upper envelope on [0, 1] of the lines ``mu -> a[0]*mu + a[1]*(1-mu)``.

    Returned left to right (increasing slope).
    """
    intercept = alphas[:, 1]
    slope = alphas[:, 0] - alphas[:, 1]
    hull = list(_hull_order(intercept, slope))
    # keep lines on top somewhere in [0, 1] by more than PRUNE_EPS;
    # never drop two neighbours in the same pass
    while len(hull) > 1:
        h = np.array(hull)
        margins = _envelope_margins(intercept[h], slope[h])
        weak = np.nonzero(margins <= PRUNE_EPS)[0]
        if weak.size == 0:
            break
        drop = set()
        for t in weak[np.argsort(margins[weak], kind="stable")]:
            if t - 1 in drop or t + 1 in drop:
                continue
            drop.add(int(t))
        hull = [i for t, i in enumerate(hull) if t not in drop]
    return alphas[hull], [tags[i] for i in hull]


def _ordered_envelope(V):
    """Lines of a pruned two-state envelope sorted by slope, with breakpoints."""
    a = V.alphas
    a = a[np.argsort(a[:, 0] - a[:, 1], kind="stable")]
    b, s = a[:, 1], a[:, 0] - a[:, 1]
    xs = (b[:-1] - b[1:]) / (s[1:] - s[:-1])
    return a, xs


def _cross_sum_two_state(A, B, tag):
    """Pointwise sum of two pruned two-state envelopes in linear time.

    On every interval between merged breakpoints exactly one line of each
    envelope is active, and their sum is a line of the result.
    """
    a, xa = _ordered_envelope(A)
    b, xb = _ordered_envelope(B)
    cuts = np.union1d(xa, xb)
    if cuts.size:
        probes = np.concatenate([[cuts[0] - 1.0], 0.5 * (cuts[:-1] + cuts[1:]), [cuts[-1] + 1.0]])
    else:
        probes = np.zeros(1)
    sums = a[np.searchsorted(xa, probes)] + b[np.searchsorted(xb, probes)]
    return prune(PwlcValue(sums, (tag,) * sums.shape[0]))


def _lines_on_top(a, xa, other, x_other, strict):
    """Mask of lines in the ordered envelope `a` that reach `other` (or beat
    it, if `strict`) somewhere on their own active interval within [0, 1]."""
    lo = np.concatenate([[0.0], np.clip(xa, 0.0, 1.0)])
    hi = np.concatenate([np.clip(xa, 0.0, 1.0), [1.0]])
    inner = x_other[(x_other > 0.0) & (x_other < 1.0)]
    # line - other is concave, so its max sits at an endpoint or a kink of other
    probes = np.concatenate(
        [lo[:, None], hi[:, None], np.broadcast_to(inner, (lo.size, inner.size))], axis=1
    )
    probes = np.clip(probes, lo[:, None], hi[:, None])
    line = a[:, 1:2] + (a[:, 0:1] - a[:, 1:2]) * probes
    rival = _evaluate_envelope(other, x_other, probes.ravel()).reshape(probes.shape)
    lead = np.max(line - rival, axis=1)
    return ((lead > 0.0) if strict else (lead >= 0.0)) & (hi >= lo)


def pointwise_max(A, B):
    """Pruned ``max(A, B)``; on exact ties the alphas of `A` are kept."""
    if A.state_count != 2:
        return prune(union(A, B))
    A, B = prune(A), prune(B)
    oa = np.argsort(A.alphas[:, 0] - A.alphas[:, 1], kind="stable")
    ob = np.argsort(B.alphas[:, 0] - B.alphas[:, 1], kind="stable")
    a, xa = _ordered_envelope(A)
    b, xb = _ordered_envelope(B)
    keep_a = _lines_on_top(a, xa, b, xb, strict=False)
    keep_b = _lines_on_top(b, xb, a, xa, strict=True)
    alphas = np.vstack([a[keep_a], b[keep_b]])
    tags = [A.tags[i] for i in oa[keep_a]] + [B.tags[i] for i in ob[keep_b]]
    return prune(PwlcValue(alphas, tuple(tags)))


@lru_cache(maxsize=None)
def _probe_beliefs(m):
    sample = np.random.default_rng(m).dirichlet(np.ones(m), 8 * m)
    probes = np.vstack([np.eye(m), np.full((1, m), 1.0 / m), sample])
    probes.setflags(write=False)
    return probes


def _prune_general(alphas, tags):
    n = alphas.shape[0]
    # pairwise pointwise domination; earlier alphas win exact ties
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        dominated = np.all(alphas[i] >= alphas - PRUNE_EPS, axis=1)
        dominated[i] = False
        keep &= ~dominated
    idx = np.nonzero(keep)[0]
    A = alphas[idx]
    m = A.shape[1]
    # winners at fixed probe beliefs are certainly part of the envelope
    kept = sorted(set(np.argmax(_probe_beliefs(m) @ A.T, axis=1).tolist()))
    pending = [i for i in range(len(idx)) if i not in set(kept)]
    # a candidate beaten by the kept lines is beaten by the final set as well
    while pending:
        i = pending.pop()
        margin, mu = max_margin(A[i], A[kept])
        if margin <= PRUNE_EPS:
            continue
        rivals = sorted(pending + [i])
        j = rivals[int(np.argmax(A[rivals] @ mu))]
        kept.append(j)
        if j != i:
            pending.remove(j)
            pending.append(i)
    kept.sort()
    return A[kept], [tags[idx[i]] for i in kept]


def prune(V):
    """Remove alphas that never attain the maximum by more than PRUNE_EPS."""
    if len(V) <= 1:
        return V
    alphas, tags = _dedupe(V.alphas, list(V.tags))
    if alphas.shape[0] > 1:
        if alphas.shape[1] == 2:
            alphas, tags = _envelope_two_state(alphas, tags)
        else:
            alphas, tags = _prune_general(alphas, tags)
    return PwlcValue(alphas, tuple(tags))


def cross_sum(A, B, tag=("acquire",)):
    """``{a + b}`` over all pairs, pruned."""
    if A.state_count == 2:
        return _cross_sum_two_state(prune(A), prune(B), tag)
    sums = (A.alphas[:, None, :] + B.alphas[None, :, :]).reshape(-1, A.state_count)
    return prune(PwlcValue(sums, (tag,) * sums.shape[0]))


def _evaluate_envelope(a, xs, x):
    """Evaluate an ordered two-state envelope at first-state probabilities `x`."""
    line = a[np.searchsorted(xs, x)]
    return line[:, 1] + (line[:, 0] - line[:, 1]) * x


def sup_distance(V, W):
    """Exact sup-norm distance between two PWLC functions on the simplex."""
    if V.state_count == 2:
        a, xa = _ordered_envelope(prune(V))
        b, xb = _ordered_envelope(prune(W))
        xs = np.concatenate([[0.0, 1.0], xa, xb])
        xs = xs[(xs >= 0.0) & (xs <= 1.0)]
        return float(np.max(np.abs(_evaluate_envelope(a, xa, xs) - _evaluate_envelope(b, xb, xs))))
    best = 0.0
    for X, Y in ((V, W), (W, V)):
        for alpha in X.alphas:
            margin, _ = max_margin(alpha, Y.alphas)
            best = max(best, margin)
    return float(best)
