"""Bounded many-to-one assignment of inputs to guarded records.

The optimization is: choose pi maximizing sum_i s[i, pi(i)] subject to
per-record count bounds lower[j] <= #{i: pi(i) = j} <= upper[j]. The
constraint matrix of this program is totally unimodular, so the integer
optimum coincides with the LP optimum and can be found by a matching
solver instead of a general ILP. We reduce to a rectangular assignment
problem by expanding record j into upper[j] unit slots, the first
lower[j] of which may not be taken by dummy rows, and then refine any
optimal solution to the lexicographically smallest optimal map so
results are reproducible across solver versions and platforms.

Scores are scaled to integers (2^32 / max|s|) before solving; all
optimality reasoning below is exact integer arithmetic on those costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InfeasibleBounds, InvalidInput, TooLarge
from .linalg import as_matrix

_SCALE = float(2**32)
_BRUTE_FORCE_CAP = 10**7


@dataclass(frozen=True, eq=False)
class GuardedRecords:
    """The m unique guarded-attribute rows with per-record count bounds."""

    z: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray

    def __post_init__(self):
        z = as_matrix(self.z, "records.z")
        lower = np.asarray(self.lower_bounds, dtype=np.int64)
        upper = np.asarray(self.upper_bounds, dtype=np.int64)
        m = z.shape[0]
        if lower.shape != (m,) or upper.shape != (m,):
            raise InvalidInput("bounds must have one entry per record")
        if np.unique(z, axis=0).shape[0] != m:
            raise InvalidInput("record rows must be pairwise distinct")
        if lower.min() < 0:
            raise InvalidInput("lower bounds must be non-negative")
        if np.any(lower > upper):
            j = int(np.argmax(lower > upper))
            raise InvalidInput(f"record {j}: lower bound {lower[j]} > upper bound {upper[j]}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "lower_bounds", lower)
        object.__setattr__(self, "upper_bounds", upper)

    @property
    def m(self):
        return self.z.shape[0]

    @property
    def dim(self):
        return self.z.shape[1]

    def check_feasible(self, n):
        """Raise InfeasibleBounds if no total map of n inputs can satisfy the bounds."""
        low = int(self.lower_bounds.sum())
        high = int(np.minimum(self.upper_bounds, n).sum())
        if low > n:
            raise InfeasibleBounds(f"sum of lower bounds {low} exceeds n={n}")
        if high < n:
            raise InfeasibleBounds(f"sum of upper bounds {high} is below n={n}")


@dataclass(frozen=True, eq=False)
class Assignment:
    """A total map of the n inputs onto record indices (one per row)."""

    map: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.map)
        if idx.ndim != 1 or idx.size < 1:
            raise InvalidInput("assignment map must be a non-empty 1-d index array")
        if not np.issubdtype(idx.dtype, np.integer):
            raise InvalidInput("assignment map must hold integers")
        idx = idx.astype(np.int64)
        if idx.min() < 0:
            raise InvalidInput("assignment indices must be non-negative")
        idx.setflags(write=False)
        object.__setattr__(self, "map", idx)

    @property
    def n(self):
        return self.map.shape[0]

    def counts(self, m):
        return np.bincount(self.map, minlength=m)

    def satisfies(self, records):
        c = self.counts(records.m)
        return bool(np.all(c >= records.lower_bounds) and np.all(c <= records.upper_bounds))


def score_matrix(x, records, proj, k):
    """Pairwise agreement scores s[i, j] = <U_k^T x_i, V_k^T z_j>."""
    x = as_matrix(x, "x")
    r = proj.sigma.shape[0]
    if not 1 <= k <= r:
        raise InvalidInput(f"k={k} out of range [1, {r}]")
    if x.shape[1] != proj.u.shape[0]:
        raise InvalidInput("x columns do not match projection rows")
    if records.dim != proj.v.shape[0]:
        raise InvalidInput("record columns do not match projection rows")
    return (x @ proj.u[:, :k]) @ (records.z @ proj.v[:, :k]).T


def assignment_objective(s, pi):
    """sum_i s[i, pi(i)] for a given score matrix and map."""
    s = as_matrix(s, "s")
    idx = np.asarray(pi.map if hasattr(pi, "map") else pi)
    return float(s[np.arange(s.shape[0]), idx].sum())


def _integer_costs(s):
    """Round scores to int64 on the 2^32 / max|s| grid (exactly zero stays zero)."""
    amax = float(np.abs(s).max())
    if amax == 0.0:
        return np.zeros(s.shape, dtype=np.int64)
    return np.rint(s * (_SCALE / amax)).astype(np.int64)


def solve_assignment(s, records):
    """Exact bounded assignment maximizing the score sum.

    Returns the lexicographically smallest map among all optima, which
    pins down tie behavior independently of the underlying LAP solver.
    """
    s = as_matrix(s, "s")
    n, m = s.shape
    if m != records.m:
        raise InvalidInput(f"score matrix has {m} columns but {records.m} records")
    records.check_feasible(n)
    c = _integer_costs(s)
    pi = _initial_optimum(c, records.lower_bounds, records.upper_bounds)
    pi = _lex_refine(c, records.lower_bounds, records.upper_bounds, pi)
    out = Assignment(pi)
    assert out.satisfies(records)
    return out


def _initial_optimum(c, lower, upper, forced=None):
    """One optimal map via slot expansion and a rectangular LAP solve.

    Record j contributes min(upper[j], n) unit slots; the first lower[j]
    slots are mandatory. Dummy rows absorb the surplus slots but are
    barred from mandatory ones, which enforces the lower bounds.
    """
    n, m = c.shape
    if n >= 2**19:
        raise InvalidInput("assignment instance too large for exact integer costs")
    upper_eff = np.minimum(upper, n)
    slots_owner = np.repeat(np.arange(m), upper_eff)
    mandatory = np.concatenate(
        [np.arange(u) < l for l, u in zip(lower, upper_eff)]
    ) if m else np.zeros(0, bool)
    total = slots_owner.shape[0]
    forbid = float((n + 2) * 2**33)
    cost = np.zeros((total, total), dtype=np.float64)
    cost[:n, :] = -c[:, slots_owner]
    cost[n:, mandatory] = forbid
    row, col = linear_sum_assignment(cost)
    pi = np.empty(n, dtype=np.int64)
    pi[row[:n]] = slots_owner[col[:n]]
    return pi


def _condensed_graph(c, lower, upper, pi, counts, frozen):
    """Best single-move gains between record nodes plus a slack node.

    Arc u -> v moves the best unfrozen input out of u into v; arcs to and
    from the slack node model raising u's count (if below upper[u]) or
    lowering it (if above lower[u]). Returns (W, witness) where W[u][v]
    is the arc gain (None if unavailable) and witness the moved input.
    """
    m = c.shape[1]
    nodes = m + 1
    W = [[None] * nodes for _ in range(nodes)]
    witness = [[-1] * nodes for _ in range(nodes)]
    for u in range(m):
        rows = np.flatnonzero((pi == u) & ~frozen)
        if rows.size:
            gains = c[rows] - c[rows, u][:, None]
            best = gains.argmax(axis=0)
            for v in range(m):
                if v != u:
                    W[u][v] = int(gains[best[v], v])
                    witness[u][v] = int(rows[best[v]])
        if counts[u] < upper[u]:
            W[u][m] = 0
        if counts[u] > lower[u]:
            W[m][u] = 0
    return W, witness


def _best_paths(W):
    """Max-plus Floyd-Warshall; the residual graph of an optimum has no positive cycle."""
    nodes = len(W)
    D = [[0 if u == v else W[u][v] for v in range(nodes)] for u in range(nodes)]
    via = [[-1] * nodes for _ in range(nodes)]
    for t in range(nodes):
        Dt = D[t]
        for u in range(nodes):
            dut = D[u][t]
            if dut is None:
                continue
            Du = D[u]
            for v in range(nodes):
                dtv = Dt[v]
                if dtv is None:
                    continue
                cand = dut + dtv
                if Du[v] is None or cand > Du[v]:
                    Du[v] = cand
                    via[u][v] = t
    return D, via


def _expand_path(via, u, v, out):
    t = via[u][v]
    if t < 0:
        out.append((u, v))
    else:
        _expand_path(via, u, t, out)
        _expand_path(via, t, v, out)


def _simple_path(via, u, v):
    """Node sequence of a best path with any zero-gain cycles spliced out."""
    arcs = []
    _expand_path(via, u, v, arcs)
    seq = [u] + [b for _, b in arcs]
    pos = {}
    i = 0
    while i < len(seq):
        node = seq[i]
        if node in pos:
            del seq[pos[node] + 1 : i + 1]
            i = pos[node] + 1
            pos = {nd: k for k, nd in enumerate(seq[:i])}
        else:
            pos[node] = i
            i += 1
    return seq


def _lex_refine(c, lower, upper, pi):
    """Rewrite an optimal map into the lexicographically smallest optimal map.

    Inputs are fixed in index order. Input i may move from its group a to
    a smaller group b exactly when the move plus the cheapest rebalancing
    chain from b back to a has zero total gain; optimality of the current
    map guarantees the total can never be positive.
    """
    n, m = c.shape
    pi = pi.copy()
    frozen = np.zeros(n, dtype=bool)
    for i in range(n):
        frozen[i] = True
        a = int(pi[i])
        if a == 0:
            continue
        counts = np.bincount(pi, minlength=m)
        W, witness = _condensed_graph(c, lower, upper, pi, counts, frozen)
        D, via = _best_paths(W)
        base = int(c[i, a])
        for b in range(a):
            if D[b][a] is None:
                continue
            if int(c[i, b]) - base + D[b][a] == 0:
                seq = _simple_path(via, b, a)
                for u, v in zip(seq, seq[1:]):
                    if u < m and v < m:
                        pi[witness[u][v]] = v
                pi[i] = b
                break
    return pi


def brute_force_assignment(s, records):
    """Exhaustive oracle over all feasible maps, lexicographic order.

    Mirrors solve_assignment exactly (same integer costs, same tie rule:
    the first map attaining the maximum wins), so the two must agree on
    both objective and map wherever this search is tractable.
    """
    s = as_matrix(s, "s")
    n, m = s.shape
    if m != records.m:
        raise InvalidInput(f"score matrix has {m} columns but {records.m} records")
    if m**n > _BRUTE_FORCE_CAP:
        raise TooLarge(f"{m}^{n} feasible-map candidates exceed the enumeration cap")
    records.check_feasible(n)
    c = _integer_costs(s)
    lower = records.lower_bounds
    upper = np.minimum(records.upper_bounds, n)

    best_val = -math.inf
    best = None
    counts = np.zeros(m, dtype=np.int64)
    pi = np.zeros(n, dtype=np.int64)

    def rest_feasible(depth):
        deficit = int(np.maximum(lower - counts, 0).sum())
        return deficit <= n - depth

    def recurse(depth, value):
        nonlocal best_val, best
        if depth == n:
            if value > best_val:
                best_val = value
                best = pi.copy()
            return
        for j in range(m):
            if counts[j] >= upper[j]:
                continue
            counts[j] += 1
            pi[depth] = j
            if rest_feasible(depth + 1):
                recurse(depth + 1, value + int(c[depth, j]))
            counts[j] -= 1

    recurse(0, 0)
    assert best is not None
    return Assignment(best)


def bounds_from_priors(priors, n, slack):
    """Count bounds n*p_j*(1 -/+ slack), floored and ceiled, then repaired.

    Upper bounds are raised minimally (largest prior first) until they
    cover n, and lower bounds are trimmed (largest first) until their sum
    fits under n, so the result is always feasible.
    """
    priors = np.asarray(priors, dtype=np.float64)
    if priors.ndim != 1 or priors.size < 1:
        raise InvalidInput("priors must be a 1-d vector")
    if not np.all(np.isfinite(priors)) or priors.min() < 0.0:
        raise InvalidInput("priors must be finite and non-negative")
    if abs(priors.sum() - 1.0) > 1e-9:
        raise InvalidInput(f"priors sum to {priors.sum()}, expected 1")
    if not 0.0 <= slack < 1.0:
        raise InvalidInput(f"slack must be in [0, 1), got {slack}")
    if n < 1:
        raise InvalidInput("n must be positive")
    # 1e-9 guards keep float fuzz in n*p*(1 +/- slack) from moving a floor/ceil.
    lower = np.floor(n * priors * (1.0 - slack) + 1e-9).astype(np.int64)
    upper = np.ceil(n * priors * (1.0 + slack) - 1e-9).astype(np.int64)
    upper = np.minimum(upper, n)
    deficit = n - int(upper.sum())
    if deficit > 0:
        for j in np.lexsort((np.arange(priors.size), -priors)):
            add = min(n - int(upper[j]), deficit)
            upper[j] += add
            deficit -= add
            if deficit == 0:
                break
    excess = int(lower.sum()) - n
    while excess > 0:
        j = int(np.argmax(lower))
        lower[j] -= 1
        excess -= 1
    lower = np.minimum(lower, upper)
    return lower, upper
