"""Potentials, coverage accounting and the potential-bound checkers.

Centers are given either as location indices (a sequence of ints, the form
produced by seeding) or as an ``(n, 2)`` array of coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConditioningError, DomainError, ParameterError
from .instance import Instance, as_points, optimal_cost_closed_form

REL_TOL = 1e-9


def leq(a: float, b: float, rel: float = REL_TOL) -> bool:
    """``a <= b`` up to a relative slack of ``rel``."""
    return a <= b + rel * max(abs(a), abs(b))


def _is_index_set(centers) -> bool:
    if isinstance(centers, np.ndarray):
        return centers.ndim == 1 and np.issubdtype(centers.dtype, np.integer)
    return all(isinstance(c, (int, np.integer)) and not isinstance(c, bool) for c in centers)


def center_coords(points, centers) -> np.ndarray:
    pts = as_points(points)
    if len(centers) == 0:
        raise DomainError("empty center set")
    if _is_index_set(centers):
        idx = np.asarray(centers, dtype=np.int64)
        if idx.min() < 0 or idx.max() >= len(pts):
            raise ParameterError("center index out of range")
        return pts.coords[idx]
    c = np.asarray(centers, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != 2:
        raise ParameterError("coordinate centers must have shape (n, 2)")
    return c


def sq_dist_to_nearest(coords: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = np.full(coords.shape[0], np.inf)
    for c in centers:
        diff = coords - c
        np.minimum(d2, diff[:, 0] ** 2 + diff[:, 1] ** 2, out=d2)
    return d2


def site_potentials(points, centers) -> np.ndarray:
    pts = as_points(points)
    return pts.weights * sq_dist_to_nearest(pts.coords, center_coords(pts, centers))


def potential(points, centers) -> float:
    return float(site_potentials(points, centers).sum())


@dataclass(frozen=True)
class CoverageState:
    covered_groups: frozenset[int]
    s: int
    t: int
    xi: bool


def _center_indices(instance: Instance, centers) -> np.ndarray:
    if not _is_index_set(centers):
        raise ParameterError("coverage needs centers given as location indices")
    idx = np.asarray(centers, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= len(instance)):
        raise ParameterError("center index out of range")
    return idx


def coverage_state(instance: Instance, centers) -> CoverageState:
    idx = _center_indices(instance, centers)
    groups = instance.groups[idx]
    covered = frozenset(int(g) for g in groups)
    return CoverageState(
        covered_groups=covered,
        s=sum(1 for g in covered if g >= 1),
        t=int(np.count_nonzero(groups >= 1)),
        xi=bool(idx.size) and int(idx[0]) == instance.origin_index,
    )


def split_potential(instance: Instance, centers) -> tuple[float, float, float]:
    """Return ``(phi_c, phi_u, phi_0)``.

    ``phi_c``/``phi_u`` sum over covered/uncovered groups among ``G_1..G_{k-1}``;
    ``phi_0`` is the potential of ``G_0`` on its own.
    """
    state = coverage_state(instance, centers)
    per_group = np.add.reduceat(site_potentials(instance, centers), instance.group_starts)
    phi_c = phi_u = 0.0
    for g in range(1, instance.params.k):
        if g in state.covered_groups:
            phi_c += per_group[g]
        else:
            phi_u += per_group[g]
    return float(phi_c), float(phi_u), float(per_group[0])


def ratio_bound(k_bar: int, delta_geom: float, s: int) -> tuple[float, float]:
    """Upper bound ``z_s`` on phi_u/phi_c and the matching ``p_s = z_s/(1+z_s)``.

    At ``s = 0`` the chain convention ``p_0 = 1`` applies and ``z`` is infinite.
    """
    if s == 0:
        return math.inf, 1.0
    z = (k_bar - s) * 80.0 * delta_geom**2 / (s - 0.5)
    return z, (z / (1.0 + z) if z > 0 else 0.0)


@dataclass(frozen=True)
class LemmaReport:
    s: int
    t: int
    phi_c: float
    phi_u: float
    lower11: float
    upper12: float
    lower13: float
    z_s: float
    p_s: float
    lemma11_ok: bool
    lemma12_ok: bool
    lemma13_ok: bool
    ratio_ok: bool
    psbound_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.lemma11_ok and self.lemma12_ok and self.lemma13_ok and self.ratio_ok and self.psbound_ok


def bound_values(k: int, m: float, r: float, delta_geom: float, s: int) -> tuple[float, float, float]:
    """Closed-form (lower on phi_c, upper on phi_u, lower on phi_u) after ``s`` covers."""
    lower11 = (2 * s - 1) * k * m * r**2 / 4.0
    upper12 = 40.0 * k * (k - s - 1) * m * r**2 * delta_geom**2
    lower13 = 4.0 * k * (k - s - 1) * m * r**2 * delta_geom**2
    return lower11, upper12, lower13


def check_bounds(k, m, r, delta_geom, s, t, phi_c, phi_u) -> LemmaReport:
    lower11, upper12, lower13 = bound_values(k, m, r, delta_geom, s)
    z, p = ratio_bound(k - 1, delta_geom, s)
    if phi_c > 0:
        ratio_ok = math.isinf(z) or leq(phi_u / phi_c, z)
    else:
        ratio_ok = phi_u == 0 or math.isinf(z)
    total = phi_c + phi_u
    ps_ok = total == 0 or leq(phi_u / total, p)
    return LemmaReport(
        s=s, t=t, phi_c=phi_c, phi_u=phi_u,
        lower11=lower11, upper12=upper12, lower13=lower13, z_s=z, p_s=p,
        lemma11_ok=leq(lower11, phi_c),
        lemma12_ok=leq(phi_u, upper12),
        lemma13_ok=leq(lower13, phi_u),
        ratio_ok=ratio_ok,
        psbound_ok=ps_ok,
    )


def lemma_bound_report(instance: Instance, centers) -> LemmaReport:
    state = coverage_state(instance, centers)
    if not state.xi:
        raise ConditioningError("first center is not the origin site; bounds assume it is")
    p = instance.params
    if state.t > p.k - 1:
        raise ParameterError(f"t = {state.t} exceeds k - 1 = {p.k - 1}")
    phi_c, phi_u, _ = split_potential(instance, centers)
    return check_bounds(p.k, p.m, p.r, p.delta_geom, state.s, state.t, phi_c, phi_u)


def approximation_ratio(instance: Instance, centers) -> float:
    opt = optimal_cost_closed_form(instance.params)
    if opt <= 0:
        raise DomainError("optimal cost is zero for k = 1; ratio undefined")
    return potential(instance, centers) / opt


def min_covered_for_alpha(k_bar: int, delta_geom: float, alpha: float) -> int:
    """Smallest number of covered groups among G_1..G_{k_bar} compatible with ratio alpha.

    Evaluated in exact rational arithmetic on the binary64 inputs so that an
    integral ``k_bar * (1 - u)`` is never pushed up by roundoff.
    """
    if delta_geom < 1 or alpha <= 0:
        raise ParameterError("need delta_geom >= 1 and alpha > 0")
    u = Fraction(alpha) / (2 * Fraction(delta_geom) ** 2)
    s = math.ceil(k_bar * (1 - u))
    return max(0, min(k_bar, s))
