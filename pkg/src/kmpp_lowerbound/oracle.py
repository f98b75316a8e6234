"""Exhaustive ground truth for tiny point sets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, ParameterError, SamplingError
from .evaluation import approximation_ratio, coverage_state
from .instance import Instance, as_points

SUFFIX_ATOMS = 8


@dataclass(frozen=True)
class PartitionResult:
    partition: tuple[int, ...]  # cluster id per input location
    centers: np.ndarray
    cost: float


def _merge_atoms(pts):
    keys = {}
    atom_of = np.empty(len(pts), dtype=np.int64)
    for i, (x, y) in enumerate(pts.coords):
        atom_of[i] = keys.setdefault((float(x), float(y)), len(keys))
    xy = np.array(list(keys), dtype=np.float64).reshape(-1, 2)
    w = np.bincount(atom_of, weights=pts.weights, minlength=len(keys))
    return xy, w, atom_of


def restricted_growth_strings(n: int, k: int):
    """All set partitions of n items into at most k blocks, in lexicographic order."""
    if n == 0:
        yield ()
        return
    a = [0] * n

    def rec(i, mx):
        if i == n:
            yield tuple(a)
            return
        for c in range(min(mx + 2, k)):
            a[i] = c
            yield from rec(i + 1, max(mx, c))

    yield from rec(1, 0)


def partition_cost(xy: np.ndarray, w: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Weighted within-cluster squared error about weighted centroids (two-pass)."""
    labels = np.asarray(labels)
    ids = np.unique(labels)
    centers = np.zeros((ids.max() + 1, 2))
    cost = 0.0
    for c in ids:
        sel = labels == c
        ws = w[sel]
        tot = ws.sum()
        if tot > 0:
            centers[c] = (ws[:, None] * xy[sel]).sum(axis=0) / tot
        else:
            centers[c] = xy[sel].mean(axis=0)
        d = xy[sel] - centers[c]
        cost += float((ws * (d**2).sum(axis=1)).sum())
    return cost, centers


def brute_force_optimal(points, k: int, max_locations: int = 16) -> PartitionResult:
    """Minimum-cost partition of the distinct locations into at most ``k`` clusters.

    Prefixes are enumerated as restricted-growth strings; the last few atoms
    are scored in one vectorized block per prefix. Ties go to the
    lexicographically smallest encoding.
    """
    pts = as_points(points)
    if k < 1:
        raise ParameterError("k must be >= 1")
    xy, w, atom_of = _merge_atoms(pts)
    n = len(w)
    if n > max_locations:
        raise BudgetExceeded(f"{n} distinct locations exceeds max_locations={max_locations}")
    k = min(k, n)
    p = min(SUFFIX_ATOMS, n - 1)
    h = n - p
    suffix = np.array(list(itertools.product(range(k), repeat=p)), dtype=np.int64).reshape(-1, p)
    # running max label along each suffix, used to enforce the growth rule
    run_max = np.maximum.accumulate(suffix, axis=1) if p else suffix
    sx, sy, sw = xy[h:, 0], xy[h:, 1], w[h:]
    s2 = sw * (sx**2 + sy**2)
    onehots = [(suffix == c).astype(np.float64) for c in range(k)]
    suf = [(oh @ sw, oh @ (sw * sx), oh @ (sw * sy), oh @ s2) for oh in onehots]
    pre_w = w[:h]
    pre_x = w[:h] * xy[:h, 0]
    pre_y = w[:h] * xy[:h, 1]
    pre_2 = w[:h] * (xy[:h, 0] ** 2 + xy[:h, 1] ** 2)

    best_cost, best = math.inf, None
    for prefix in restricted_growth_strings(h, k):
        lab = np.array(prefix, dtype=np.int64)
        mx = int(lab.max())
        if p:
            # suffix label at position i may be at most max(prefix max, earlier suffix labels) + 1
            prev_max = np.concatenate([np.full((len(suffix), 1), mx), np.maximum(run_max[:, :-1], mx)], axis=1)
            valid = np.all(suffix <= prev_max + 1, axis=1)
        else:
            valid = np.ones(1, dtype=bool)
        cost = np.zeros(len(suffix))
        for c in range(k):
            sel = lab == c
            W = pre_w[sel].sum() + suf[c][0]
            X = pre_x[sel].sum() + suf[c][1]
            Y = pre_y[sel].sum() + suf[c][2]
            Q = pre_2[sel].sum() + suf[c][3]
            with np.errstate(divide="ignore", invalid="ignore"):
                cost += np.where(W > 0, Q - (X**2 + Y**2) / W, 0.0)
        cost = np.where(valid, cost, np.inf)
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost = cost[i]
            best = np.concatenate([lab, suffix[i]]) if p else lab
    exact, centers = partition_cost(xy, w, best)
    return PartitionResult(tuple(int(best[a]) for a in atom_of), centers, exact)


def first_center_distribution(points) -> np.ndarray:
    pts = as_points(points)
    total = pts.weights.sum()
    if not total > 0:
        raise SamplingError("total weight is zero")
    return pts.weights / total


def exact_seeding_distribution(points, k: int, max_sequences: int = 10**6) -> dict[tuple[int, ...], float]:
    """Probability of every ordered sequence of ``k`` centers under D^2 seeding."""
    pts = as_points(points)
    n = len(pts)
    if k < 1 or k > n:
        raise ParameterError(f"k must lie in [1, {n}]")
    if n**k > max_sequences:
        raise BudgetExceeded(f"{n}^{k} = {n**k} sequences exceeds max_sequences={max_sequences}")
    X, w = pts.coords, pts.weights
    out: dict[tuple[int, ...], float] = {}

    def rec(seq, prob, d2):
        if len(seq) == k:
            out[tuple(seq)] = out.get(tuple(seq), 0.0) + prob
            return
        mass = w * d2
        if not mass.sum() > 0:
            mass = np.where(np.isin(np.arange(n), seq), 0.0, w)
        total = mass.sum()
        for i in np.flatnonzero(mass > 0):
            dx = X[:, 0] - X[i, 0]
            dy = X[:, 1] - X[i, 1]
            rec(seq + [int(i)], prob * mass[i] / total, np.minimum(d2, dx**2 + dy**2))

    first = w / w.sum()
    for i in np.flatnonzero(first > 0):
        dx = X[:, 0] - X[i, 0]
        dy = X[:, 1] - X[i, 1]
        rec([int(i)], float(first[i]), dx**2 + dy**2)
    return out


@dataclass(frozen=True)
class SeedingMarginals:
    p_xi: float
    p_covered_at_least: dict[int, float]
    p_ratio_at_most: float


def seeding_marginals(instance: Instance, dist: dict, alpha: float) -> SeedingMarginals:
    p_xi = 0.0
    p_ratio = 0.0
    by_cover: dict[int, float] = {}
    for seq, prob in dist.items():
        st = coverage_state(instance, list(seq))
        if st.xi:
            p_xi += prob
        by_cover[st.s] = by_cover.get(st.s, 0.0) + prob
        if approximation_ratio(instance, list(seq)) <= alpha:
            p_ratio += prob
    kbar = instance.params.k - 1
    at_least = {c: sum(v for s, v in by_cover.items() if s >= c) for c in range(kbar + 1)}
    return SeedingMarginals(p_xi, at_least, p_ratio)
