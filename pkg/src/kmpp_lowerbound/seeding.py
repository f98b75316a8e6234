"""D^2 (k-means++) seeding on weighted point sets, Lloyd refinement, batched trials.

Sampling is by inverse CDF: draw ``u`` in [0, 1), scale by the cumulative
total and take the first index whose cumulative weight exceeds it. Zero-weight
indices are never selected. Center ``j`` of a trial always consumes draw ``j``
of the trial's stream, so :func:`kmeanspp_seed` and the batched engine behind
:func:`run_trials` produce identical centers for the same stream.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import rng as rngmod
from .errors import ParameterError, SamplingError
from .evaluation import bound_values, center_coords, sq_dist_to_nearest
from .instance import Instance, as_points, optimal_cost_closed_form
from .rng import RngStream

CHUNK = 2048  # trials per batch; fixed so results never depend on --threads


def _validate_weights(w: np.ndarray) -> None:
    if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w < 0):
        raise SamplingError("weights must be finite and non-negative")


def _invert(cdf: np.ndarray, u: float) -> int:
    total = cdf[-1]
    i = int(np.searchsorted(cdf, u * total, side="right"))
    if i == cdf.shape[0]:
        # u * total rounded up to total; fall back to the last positive weight
        i = int(np.searchsorted(cdf, total, side="left"))
    return i


def weighted_choice(weights, rng: RngStream) -> int:
    w = np.asarray(weights, dtype=np.float64)
    _validate_weights(w)
    cdf = np.cumsum(w)
    if not cdf[-1] > 0:
        raise SamplingError("all weights are zero")
    return _invert(cdf, rng.uniform())


@dataclass(frozen=True)
class TraceStep:
    index: int
    potential_before: float  # inf before the first center
    potential_after: float
    s: int | None
    t: int | None


@dataclass(frozen=True)
class SeedingTrace:
    steps: tuple[TraceStep, ...]
    xi: bool | None

    @property
    def centers(self) -> list[int]:
        return [st.index for st in self.steps]


def kmeanspp_seed(points, k: int, rng: RngStream) -> tuple[list[int], SeedingTrace]:
    """Choose ``k`` location indices by D^2 sampling."""
    pts = as_points(points)
    n = len(pts)
    if k < 1:
        raise ParameterError("k must be >= 1")
    if k > n:
        raise ParameterError(f"k = {k} exceeds the number of locations ({n})")
    if not pts.total_mass > 0:
        raise SamplingError("total weight is zero")
    groups = points.groups if isinstance(points, Instance) else None
    w = pts.weights
    d2 = np.full(n, np.inf)
    chosen = np.zeros(n, dtype=bool)
    covered: set[int] = set()
    t = 0
    before = math.inf
    steps = []
    centers: list[int] = []
    for j in range(k):
        if j == 0:
            cdf = np.cumsum(w)
        else:
            cdf = np.cumsum(w * d2)
            if not cdf[-1] > 0:
                cdf = np.cumsum(np.where(chosen, 0.0, w))
                if not cdf[-1] > 0:
                    raise SamplingError("no unchosen location with positive weight")
        idx = _invert(cdf, rng.uniform())
        centers.append(idx)
        chosen[idx] = True
        dx = pts.coords[:, 0] - pts.coords[idx, 0]
        dy = pts.coords[:, 1] - pts.coords[idx, 1]
        np.minimum(d2, dx**2 + dy**2, out=d2)
        after = float((w * d2).sum())
        s = None
        if groups is not None:
            g = int(groups[idx])
            if g >= 1:
                covered.add(g)
                t += 1
            s = len(covered)
        steps.append(TraceStep(idx, before, after, s, t if groups is not None else None))
        before = after
    xi = (centers[0] == points.origin_index) if groups is not None else None
    return centers, SeedingTrace(tuple(steps), xi)


def lloyd(points, centers, max_iters: int = 100, tol: float = 0.0, history: list | None = None) -> np.ndarray:
    """Weighted Lloyd iterations from the given starting coordinates.

    Stops when an update improves the potential by at most ``tol`` or after
    ``max_iters`` updates. Clusters that receive no mass keep their center.
    If ``history`` is a list, the potential before each update and after the
    last one are appended to it.
    """
    pts = as_points(points)
    c = np.array(center_coords(pts, centers), dtype=np.float64)
    if max_iters < 0 or tol < 0:
        raise ParameterError("max_iters and tol must be non-negative")
    w = pts.weights

    def assign(cs):
        d2 = ((pts.coords[:, None, :] - cs[None, :, :]) ** 2).sum(axis=2)
        lab = np.argmin(d2, axis=1)  # first minimum: lowest center index wins ties
        return lab, float((w * d2[np.arange(len(w)), lab]).sum())

    lab, cur = assign(c)
    if history is not None:
        history.append(cur)
    for _ in range(max_iters):
        mass = np.bincount(lab, weights=w, minlength=len(c))
        sx = np.bincount(lab, weights=w * pts.coords[:, 0], minlength=len(c))
        sy = np.bincount(lab, weights=w * pts.coords[:, 1], minlength=len(c))
        new = c.copy()
        live = mass > 0
        new[live, 0] = sx[live] / mass[live]
        new[live, 1] = sy[live] / mass[live]
        lab_new, nxt = assign(new)
        if nxt > cur:
            # centroid step cannot increase cost; guard against roundoff
            break
        c, lab = new, lab_new
        improvement, cur = cur - nxt, nxt
        if history is not None:
            history.append(cur)
        if improvement <= tol:
            break
    return c


# ---------------------------------------------------------------------------
# batched trials


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    k: int
    m: float
    r: float
    delta: float
    xi: bool
    covered: int
    t_centers: int
    ratio: float
    success: bool
    lemma11_ok: bool | None
    lemma12_ok: bool | None
    lemma13_ok: bool | None
    psbound_ok: bool | None


CSV_COLUMNS = tuple(f.name for f in fields(TrialRecord))


def _leq(a, b, rel=1e-9):
    return a <= b + rel * np.maximum(np.abs(a), np.abs(b))


def seed_batch(points, k: int, keys: np.ndarray, on_state=None) -> np.ndarray:
    """Vectorized D^2 seeding of one trial per stream key; returns (T, k) indices.

    ``on_state(j, idx, d2)`` is called after center ``j`` is placed, with the
    chosen indices ``idx`` (T,) and the current squared-distance cache (T, n).
    """
    pts = as_points(points)
    n = len(pts)
    if k > n:
        raise ParameterError(f"k = {k} exceeds the number of locations ({n})")
    T = keys.shape[0]
    w = pts.weights
    X = pts.coords
    rows = np.arange(T)
    out = np.empty((T, k), dtype=np.int64)
    d2 = np.full((T, n), np.inf)
    chosen = np.zeros((T, n), dtype=bool)
    base_cdf = np.cumsum(w)
    if not base_cdf[-1] > 0:
        raise SamplingError("total weight is zero")
    for j in range(k):
        u = rngmod.uniforms(keys, j)
        if j == 0:
            cdf = np.broadcast_to(base_cdf, (T, n))
        else:
            cdf = np.cumsum(w * d2, axis=1)
            dead = ~(cdf[:, -1] > 0)
            if dead.any():
                alt = np.cumsum(np.where(chosen[dead], 0.0, w), axis=1)
                if not np.all(alt[:, -1] > 0):
                    raise SamplingError("no unchosen location with positive weight")
                cdf[dead] = alt
        total = cdf[:, -1]
        idx = np.count_nonzero(cdf <= (u * total)[:, None], axis=1)
        over = idx == n
        if over.any():
            idx[over] = np.argmax(cdf[over] >= total[over, None], axis=1)
        out[:, j] = idx
        chosen[rows, idx] = True
        dx = X[:, 0][None, :] - X[idx, 0][:, None]
        dy = X[:, 1][None, :] - X[idx, 1][:, None]
        np.minimum(d2, dx**2 + dy**2, out=d2)
        if on_state is not None:
            on_state(j, idx, d2)
    return out


def _trial_chunk(instance: Instance, trial_ids: np.ndarray, base_seed: int, alpha: float) -> list[TrialRecord]:
    p = instance.params
    k = p.k
    keys = rngmod.stream_keys(base_seed, trial_ids)
    T = trial_ids.shape[0]
    groups = instance.groups
    starts = instance.group_starts
    w = instance.weights
    covered = np.zeros((T, k), dtype=bool)
    t_count = np.zeros(T, dtype=np.int64)
    ok = np.ones((4, T), dtype=bool)
    xi = np.zeros(T, dtype=bool)
    final = {}

    def on_state(j, idx, d2):
        g = groups[idx]
        covered[np.arange(T), g] = True
        t_count[:] += g >= 1
        if j == 0:
            xi[:] = idx == instance.origin_index
        pg = np.add.reduceat(w * d2, starts, axis=1)
        cov = covered[:, 1:]
        phi_c = np.where(cov, pg[:, 1:], 0.0).sum(axis=1)
        phi_u = np.where(cov, 0.0, pg[:, 1:]).sum(axis=1)
        s = cov.sum(axis=1)
        lo11, up12, lo13 = bound_values(k, p.m, p.r, p.delta_geom, s)
        sf = s.astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(s > 0, (k - 1 - sf) * 80.0 * p.delta_geom**2 / (sf - 0.5), np.inf)
            ps = np.where(s > 0, z / (1.0 + z), 1.0)
            tot = phi_c + phi_u
            frac = np.where(tot > 0, phi_u / tot, 0.0)
        ok[0] &= _leq(lo11, phi_c)
        ok[1] &= _leq(phi_u, up12)
        ok[2] &= _leq(lo13, phi_u)
        ok[3] &= _leq(frac, ps)
        if j == k - 1:
            final["pot"] = (w * d2).sum(axis=1)
            final["s"] = s

    seed_batch(instance, k, keys, on_state)
    ratio = final["pot"] / optimal_cost_closed_form(p)
    recs = []
    for a in range(T):
        checks = [bool(v) for v in ok[:, a]] if xi[a] else [None] * 4
        recs.append(TrialRecord(
            trial=int(trial_ids[a]), seed=int(keys[a]), k=k, m=p.m, r=p.r, delta=p.delta_geom,
            xi=bool(xi[a]), covered=int(final["s"][a]), t_centers=int(t_count[a]),
            ratio=float(ratio[a]), success=bool(ratio[a] <= alpha), lemma11_ok=checks[0],
            lemma12_ok=checks[1], lemma13_ok=checks[2], psbound_ok=checks[3],
        ))
    return recs


def run_trials(instance: Instance, trials: int, base_seed: int, alpha: float,
               threads: int = 1, first_trial: int = 0) -> list[TrialRecord]:
    """Seed ``trials`` independent times; trial ``t`` uses stream ``(base_seed, t)``."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if instance.params.k < 2:
        raise ParameterError("trials need k >= 2 (optimal cost is zero for k = 1)")
    ids = np.arange(first_trial, first_trial + trials, dtype=np.int64)
    chunks = [ids[i:i + CHUNK] for i in range(0, trials, CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        parts = [_trial_chunk(instance, c, base_seed, alpha) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda c: _trial_chunk(instance, c, base_seed, alpha), chunks))
    return [rec for part in parts for rec in part]
