"""The planar bad-instance family for k-means++.

Group ``G_0`` is one heavy site at the origin. Group ``G_i`` (``i >= 1``) sits
on the vertical line ``x_i = delta * (2**i - 1) * r`` and has an axis site of
weight ``4 k m_i`` plus, for each offset ``j' in [0, k)``, two sites at
``y = +-2**j' * r_i`` of weight ``m_i / 4**j'``, where ``m_i = m / 4**(i-1)``
and ``r_i = 2**(i-1) r``. The site at ``y = +-2**(L-1) r`` is said to be on
level ``+-L``; group ``i`` therefore occupies levels ``i .. i+k-1`` on both
sides of the axis.

Point multiplicities are stored as real weights, so ``m`` may be any positive
real and no site count has to be an integer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class InstanceParams:
    k: int
    m: float = 1.0
    r: float = 1.0
    delta_geom: float = 1.0

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k!r}")
        for name in ("m", "r"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        if not (math.isfinite(self.delta_geom) and self.delta_geom >= 1):
            raise ParameterError(f"delta_geom must be >= 1, got {self.delta_geom!r}")
        object.__setattr__(self, "k", int(self.k))
        for name in ("m", "r", "delta_geom"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class Location:
    group: int
    level: int
    x: float
    y: float
    weight: float


def omega(n: int) -> float:
    """1 + 1/4 + ... + 1/4**(n-1); zero for n = 0."""
    return (4.0 / 3.0) * (1.0 - 4.0**-n)


def group_x(params: InstanceParams, i: int) -> float:
    return params.delta_geom * (2.0**i - 1.0) * params.r


def level_y(level: int, r: float) -> float:
    if level == 0:
        return 0.0
    return math.copysign(2.0 ** (abs(level) - 1) * r, level)


def _check_group(params: InstanceParams, i: int) -> None:
    if not 0 <= i < params.k:
        raise ParameterError(f"group index {i} out of range [0, {params.k - 1}]")


def group_mass(params: InstanceParams, i: int) -> float:
    _check_group(params, i)
    k, m = params.k, params.m
    if i == 0:
        return 12.0 * k * 2.0**k * m
    m_i = m / 4.0 ** (i - 1)
    return m_i * (4.0 * k + 2.0 * omega(k))


def level_weight(params: InstanceParams, i: int, j: int) -> float:
    """Weight of group ``i`` on signed level ``j``."""
    _check_group(params, i)
    k, m = params.k, params.m
    if i == 0:
        if j != 0:
            raise DomainError("G_0 has only the axis site (level 0)")
        return group_mass(params, 0)
    if j == 0:
        return 4.0 * k * m / 4.0 ** (i - 1)
    if i <= abs(j) <= i + k - 1:
        return m / 4.0 ** (abs(j) - 1)
    return 0.0


def build_instance(params: InstanceParams) -> "Instance":
    k, m, r = params.k, params.m, params.r
    locs = [Location(0, 0, 0.0, 0.0, group_mass(params, 0))]
    for i in range(1, k):
        x = group_x(params, i)
        m_i = m / 4.0 ** (i - 1)
        r_i = 2.0 ** (i - 1) * r
        sites = [(0, 0.0, 4.0 * k * m_i)]
        for jp in range(k):
            w = m_i / 4.0**jp
            y = 2.0**jp * r_i
            sites.append((i + jp, y, w))
            sites.append((-(i + jp), -y, w))
        for level, y, w in sorted(sites):
            locs.append(Location(i, level, x, y, w))
    return Instance(params, tuple(locs))


def optimal_centers(params: InstanceParams) -> list[tuple[float, float]]:
    return [(group_x(params, i), 0.0) for i in range(params.k)]


def optimal_cost_closed_form(params: InstanceParams) -> float:
    k = params.k
    return 2.0 * k * (k - 1) * params.m * params.r**2


@dataclass(frozen=True)
class WeightedPoints:
    """A bare weighted point set; the common currency of seeding and potentials."""

    coords: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64).reshape(-1, 2)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64).reshape(-1)
        if coords.shape[0] != weights.shape[0]:
            raise ParameterError("coords and weights differ in length")
        if coords.shape[0] == 0:
            raise ParameterError("empty point set")
        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(weights))):
            raise ParameterError("non-finite coordinates or weights")
        if np.any(weights < 0):
            raise ParameterError("negative weights")
        coords.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class Instance:
    params: InstanceParams
    locations: tuple[Location, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.locations)

    @cached_property
    def points(self) -> WeightedPoints:
        return WeightedPoints(
            np.array([(l.x, l.y) for l in self.locations]),
            np.array([l.weight for l in self.locations]),
        )

    @property
    def coords(self) -> np.ndarray:
        return self.points.coords

    @property
    def weights(self) -> np.ndarray:
        return self.points.weights

    @cached_property
    def groups(self) -> np.ndarray:
        g = np.array([l.group for l in self.locations], dtype=np.int64)
        g.setflags(write=False)
        return g

    @cached_property
    def levels(self) -> np.ndarray:
        v = np.array([l.level for l in self.locations], dtype=np.int64)
        v.setflags(write=False)
        return v

    @cached_property
    def group_starts(self) -> np.ndarray:
        """Index of the first location of every group (locations are group-sorted)."""
        return np.searchsorted(self.groups, np.arange(self.params.k))

    @property
    def origin_index(self) -> int:
        return 0

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def group_masses(self) -> list[float]:
        return [float(s) for s in np.add.reduceat(self.weights, self.group_starts)]

    def to_dict(self) -> dict:
        p = self.params
        return {
            "k": p.k,
            "m": p.m,
            "r": p.r,
            "delta": p.delta_geom,
            "locations": [
                {"group": l.group, "level": l.level, "x": l.x, "y": l.y, "weight": l.weight}
                for l in self.locations
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        params = InstanceParams(int(d["k"]), float(d["m"]), float(d["r"]), float(d["delta"]))
        locs = tuple(
            Location(int(l["group"]), int(l["level"]), float(l["x"]), float(l["y"]), float(l["weight"]))
            for l in d["locations"]
        )
        keys = [(l.group, l.level) for l in locs]
        if keys != sorted(set(keys)):
            raise ParameterError("locations must be sorted by (group, level) without duplicates")
        if {l.group for l in locs} != set(range(params.k)):
            raise ParameterError("instance locations do not cover groups 0..k-1")
        return cls(params, locs)


def points_from_dict(d: dict) -> Instance | WeightedPoints:
    """Load either an instance of the family or a generic set (group/level = -1)."""
    locs = d["locations"]
    if any(int(l["group"]) < 0 for l in locs):
        return WeightedPoints(
            np.array([(float(l["x"]), float(l["y"])) for l in locs]),
            np.array([float(l["weight"]) for l in locs]),
        )
    return Instance.from_dict(d)


def points_to_dict(points: Instance | WeightedPoints) -> dict:
    if isinstance(points, Instance):
        return points.to_dict()
    return {
        "k": -1, "m": -1.0, "r": -1.0, "delta": -1.0,
        "locations": [
            {"group": -1, "level": -1, "x": float(x), "y": float(y), "weight": float(w)}
            for (x, y), w in zip(points.coords, points.weights)
        ],
    }


def dumps(points: Instance | WeightedPoints) -> str:
    return json.dumps(points_to_dict(points), indent=1) + "\n"


def as_points(points) -> WeightedPoints:
    if isinstance(points, Instance):
        return points.points
    if isinstance(points, WeightedPoints):
        return points
    raise TypeError(f"expected Instance or WeightedPoints, got {type(points).__name__}")
