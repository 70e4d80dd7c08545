"""Coordinate-ascent driver that alternates assignment and covariance steps.

One iteration takes the current map pi, computes the SVD of the
cross-covariance under pi (the maximization step), rescores all
input/record pairs in the projected space, and re-solves the bounded
assignment (the assignment step). Both half-steps maximize the same
objective sum_i <U_k^T x_i, V_k^T z_{pi(i)}> with the other block held
fixed, so the objective never decreases along a run.

The driver repeats this from several random feasible starts, keeps every
(seed, iteration) candidate, and picks either the candidate with the
largest objective (unsupervised) or the one most consistent with a small
labeled seed set (partial supervision). A k-means baseline that replaces
the alternating steps with Lloyd clustering is included for comparison.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .assignment import Assignment, GuardedRecords, score_matrix, solve_assignment
from .errors import InvalidInput, NoCandidates
from .linalg import SvdResult, as_matrix, center_columns, cross_covariance, svd

SELECTION_MODES = ("unsupervised", "partial")


@dataclass(frozen=True)
class AmsalConfig:
    """Run parameters; the defaults mirror the evaluation protocol defaults
    (three random starts, at most a hundred iterations, 20% prior slack).

    seed_labels, used only by partial selection, is a pair of index and
    record-id arrays giving the known alignment of a few inputs.
    """

    max_iterations: int = 100
    num_seeds: int = 3
    slack: float = 0.2
    score_k: int | str = "full"
    selection: str = "unsupervised"
    seed_labels: tuple | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be at least 1")
        if self.num_seeds < 1:
            raise InvalidInput("num_seeds must be at least 1")
        if not 0.0 <= self.slack < 1.0:
            raise InvalidInput(f"slack must be in [0, 1), got {self.slack}")
        if self.selection not in SELECTION_MODES:
            raise InvalidInput(f"selection must be one of {SELECTION_MODES}")
        if self.selection == "partial" and self.seed_labels is None:
            raise InvalidInput("partial selection requires seed_labels")
        if self.score_k != "full" and (not isinstance(self.score_k, int) or self.score_k < 1):
            raise InvalidInput("score_k must be a positive count or 'full'")


@dataclass(frozen=True)
class TraceRow:
    seed: int
    iteration: int
    objective: float
    assignment_hash: str
    accuracy: float  # nan when no ground truth was supplied


@dataclass(frozen=True)
class AmsalTrace:
    rows: tuple[TraceRow, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class AmsalResult:
    assignment: Assignment
    projection: SvdResult  # SVD of the cross-covariance under `assignment`
    trace: AmsalTrace
    seed: int
    objective: float


def _effective_k(cfg, proj):
    r = proj.sigma.shape[0]
    if cfg.score_k == "full":
        return r
    if cfg.score_k > r:
        raise InvalidInput(f"score_k={cfg.score_k} exceeds the {r} available directions")
    return cfg.score_k


def _hash_map(pi):
    return hashlib.sha256(pi.map.astype("<i8").tobytes()).hexdigest()[:16]


def am_iterate(x, records, pi, cfg):
    """One M-step then one A-step; returns (new pi, projection, objective).

    The objective is scored after the A-step, under the projection that
    produced the new map.
    """
    x = as_matrix(x, "x")
    omega = cross_covariance(x, records.z, pi)
    proj = svd(omega)
    k = _effective_k(cfg, proj)
    s = score_matrix(x, records, proj, k)
    new_pi = solve_assignment(s, records)
    objective = float(s[np.arange(x.shape[0]), new_pi.map].sum())
    return new_pi, proj, objective


def random_feasible_assignment(records, n, rng):
    """Random start: meet every lower bound, fill the rest proportionally
    to the bound midpoints (capped at the upper bounds), then shuffle."""
    records.check_feasible(n)
    counts = records.lower_bounds.copy()
    weights = (records.lower_bounds + records.upper_bounds) / 2.0
    for _ in range(n - int(counts.sum())):
        open_j = np.flatnonzero(counts < records.upper_bounds)
        w = weights[open_j]  # an open record has upper >= 1, so w.sum() > 0
        counts[rng.choice(open_j, p=w / w.sum())] += 1
    slots = np.repeat(np.arange(records.m), counts)
    rng.shuffle(slots)
    return Assignment(slots)


def alignment_accuracy(pi, truth):
    """Fraction of inputs mapped to their true record."""
    if pi.n != truth.n:
        raise InvalidInput("assignment and truth must have equal length")
    return float(np.mean(pi.map == truth.map))


def run_amsal(x, records, cfg, truth=None):
    """Full multi-start alternating run with per-iteration candidate retention.

    Inputs are centered defensively (both x and the record rows). A seed
    stops early once the A-step returns the map unchanged; every iterate
    of every seed stays in the candidate pool, and the final projection
    is recomputed from the selected map so it always matches the returned
    assignment. Per-seed RNG streams are split from cfg.rng_seed, so the
    result is a pure function of (inputs, cfg).
    """
    x = as_matrix(x, "x")
    n = x.shape[0]
    records.check_feasible(n)
    x_c, _ = center_columns(x)
    z_c, _ = center_columns(records.z)
    centered = GuardedRecords(z_c, records.lower_bounds, records.upper_bounds)

    rows = []
    candidates = []  # (seed, iteration, objective, pi)
    for seed_idx, child in enumerate(np.random.SeedSequence(cfg.rng_seed).spawn(cfg.num_seeds)):
        rng = np.random.default_rng(child)
        pi = random_feasible_assignment(centered, n, rng)
        for iteration in range(1, cfg.max_iterations + 1):
            new_pi, proj, objective = am_iterate(x_c, centered, pi, cfg)
            acc = alignment_accuracy(new_pi, truth) if truth is not None else float("nan")
            rows.append(TraceRow(seed_idx, iteration, objective, _hash_map(new_pi), acc))
            candidates.append((seed_idx, iteration, objective, new_pi))
            if np.array_equal(new_pi.map, pi.map):
                break
            pi = new_pi

    best = _pick_candidate(candidates, cfg.selection, cfg.seed_labels)
    seed_idx, _, objective, pi = best
    projection = svd(cross_covariance(x_c, z_c, pi))
    return AmsalResult(
        assignment=pi,
        projection=projection,
        trace=AmsalTrace(rows=tuple(rows)),
        seed=seed_idx,
        objective=objective,
    )


def _label_accuracy(pi, seed_labels):
    idx, values = seed_labels
    idx = np.asarray(idx, dtype=np.int64)
    values = np.asarray(values, dtype=np.int64)
    if idx.size < 1 or idx.size != values.size:
        raise InvalidInput("partial selection needs matching label indices and values")
    return float(np.mean(pi.map[idx] == values))


def _pick_candidate(candidates, mode, seed_labels):
    if not candidates:
        raise NoCandidates("no candidates to select from")
    if mode == "partial":
        if seed_labels is None:
            raise InvalidInput("partial selection requires seed labels")
        # accuracy first, objective next, then earliest (seed, iteration)
        return max(
            candidates,
            key=lambda c: (_label_accuracy(c[3], seed_labels), c[2], -c[0], -c[1]),
        )
    return max(candidates, key=lambda c: (c[2], -c[0], -c[1]))


def select_model(results, mode="unsupervised", seed_labels=None):
    """Pick among finished runs: largest objective, or in partial mode the
    best accuracy on the labeled pairs with objective then seed as ties."""
    if not results:
        raise NoCandidates("no candidates to select from")
    if mode not in SELECTION_MODES:
        raise InvalidInput(f"selection must be one of {SELECTION_MODES}")
    if mode == "partial":
        if seed_labels is None:
            raise InvalidInput("partial selection requires seed labels")
        return max(
            results,
            key=lambda r: (_label_accuracy(r.assignment, seed_labels), r.objective, -r.seed),
        )
    return max(results, key=lambda r: (r.objective, -r.seed))


def kmeans_assign(x, records, cfg, seed_labels=None):
    """Lloyd clustering as a drop-in replacement for the alternating steps.

    Clusters are matched to records by descending size against descending
    bound mass (or by majority vote of labeled members when seed labels
    are given), then the map is repaired to the bounds by relocating the
    points whose distance margin is smallest.
    """
    x = as_matrix(x, "x")
    n = x.shape[0]
    m = records.m
    records.check_feasible(n)
    rng = np.random.default_rng(cfg.rng_seed)

    labels, centers = _lloyd(x, m, rng)
    order_clusters = np.lexsort((np.arange(m), -np.bincount(labels, minlength=m)))
    mass = records.lower_bounds + records.upper_bounds
    order_records = np.lexsort((np.arange(m), -mass))

    cluster_to_record = np.full(m, -1, dtype=np.int64)
    taken = np.zeros(m, dtype=bool)
    if seed_labels is not None:
        idx, values = np.asarray(seed_labels[0]), np.asarray(seed_labels[1])
        for cl in order_clusters:
            members = idx[labels[idx] == cl]
            if members.size == 0:
                continue
            votes = np.bincount(values[labels[idx] == cl], minlength=m)
            rec = int(np.argmax(votes))
            if not taken[rec]:
                cluster_to_record[cl] = rec
                taken[rec] = True
    free_records = [r for r in order_records if not taken[r]]
    for cl in order_clusters:
        if cluster_to_record[cl] < 0:
            cluster_to_record[cl] = free_records.pop(0)
    pi = cluster_to_record[labels]

    pi = _repair_to_bounds(x, centers[np.argsort(cluster_to_record)], pi, records)
    return Assignment(pi)


def _lloyd(x, k, rng, max_sweeps=100):
    """k centers via a farthest-point start, then plain Lloyd sweeps."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        centers[j] = x[int(np.argmax(d2))]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_sweeps):
        dists = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dists.argmin(axis=1)
        for j in range(k):
            mask = new_labels == j
            if mask.any():
                centers[j] = x[mask].mean(axis=0)
            else:
                # re-seed an empty cluster from the farthest point
                far = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2).min(axis=1)
                centers[j] = x[int(np.argmax(far))]
                new_labels[int(np.argmax(far))] = j
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return labels, centers


def _repair_to_bounds(x, record_centers, pi, records):
    """Move lowest-margin points until every record count is inside its bounds."""
    pi = pi.copy()
    m = records.m
    dists = ((x[:, None, :] - record_centers[None, :, :]) ** 2).sum(axis=2)
    while True:
        counts = np.bincount(pi, minlength=m)
        over = np.flatnonzero(counts > records.upper_bounds)
        under = np.flatnonzero(counts < records.lower_bounds)
        if over.size == 0 and under.size == 0:
            return pi
        if over.size:
            src = int(over[0])
            dest_ok = np.flatnonzero(counts < records.upper_bounds)
        else:
            dest_ok = np.array([int(under[0])])
            src_ok = np.flatnonzero(counts > records.lower_bounds)
            src = None
        if src is not None:
            rows = np.flatnonzero(pi == src)
            margin = dists[rows][:, dest_ok] - dists[rows, src][:, None]
            r, c = np.unravel_index(int(np.argmin(margin)), margin.shape)
            pi[rows[r]] = dest_ok[c]
        else:
            dest = int(dest_ok[0])
            rows = np.flatnonzero(np.isin(pi, src_ok))
            margin = dists[rows, dest] - dists[rows, pi[rows]]
            pi[rows[int(np.argmin(margin))]] = dest
