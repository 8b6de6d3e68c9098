"""Point-process sampling for base-station deployments and blockers.

Deployments use a Matérn type-II hard-core process: a parent Poisson process
is thinned so that, among points closer than the hard-core distance, only the
one with the smallest uniform mark survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DomainError


class Point2D(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Region:
    """Axis-aligned square ``[x0, x0+side] x [y0, y0+side]``."""

    side: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if not self.side > 0:
            raise DomainError(f"region side must be positive, got {self.side!r}")

    @property
    def area(self) -> float:
        return self.side * self.side

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        return (
            (xy[:, 0] >= self.x0)
            & (xy[:, 0] <= self.x0 + self.side)
            & (xy[:, 1] >= self.y0)
            & (xy[:, 1] <= self.y0 + self.side)
        )


@dataclass(frozen=True)
class Deployment:
    positions: np.ndarray  # shape (n, 2)
    hard_core_distance: float
    region: Region
    parent_intensity: float = 0.0

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def points(self) -> list[Point2D]:
        return [Point2D(float(x), float(y)) for x, y in self.positions]

    def min_pairwise_distance(self) -> float:
        if len(self.positions) < 2:
            return math.inf
        d, _ = cKDTree(self.positions).query(self.positions, k=2)
        return float(d[:, 1].min())


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _ppp_array(intensity: float, region: Region, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(intensity * region.area)
    xy = rng.random((n, 2)) * region.side
    xy[:, 0] += region.x0
    xy[:, 1] += region.y0
    return xy


def sample_ppp(intensity: float, region: Region, seed) -> list[Point2D]:
    """Homogeneous Poisson process on ``region``.

    ``seed`` is an integer (Philox key) or an existing Generator.
    """
    if not intensity >= 0:
        raise DomainError(f"intensity must be nonnegative, got {intensity!r}")
    xy = _ppp_array(intensity, region, _rng(seed))
    return [Point2D(float(x), float(y)) for x, y in xy]


def parent_intensity(eta: float, eps: float) -> float:
    """Parent intensity whose type-II thinning retains intensity ``eta``.

    Inverts ``eta = (1 - exp(-lp * pi * eps^2)) / (pi * eps^2)``.
    """
    if eta < 0 or eps < 0:
        raise DomainError("eta and eps must be nonnegative")
    if eps == 0 or eta == 0:
        return eta
    a = math.pi * eps * eps
    if eta * a >= 1.0:
        raise ConfigError(
            f"hard-core intensity infeasible: eta*pi*eps^2 = {eta * a:.4g} must be < 1"
        )
    return -math.log1p(-eta * a) / a


def sample_mhcpp(eta: float, eps: float, region: Region, seed) -> Deployment:
    """Matérn type-II hard-core deployment with retained intensity ``eta``.

    Parents are drawn on the region dilated by ``eps`` so that points near the
    edge are thinned against neighbours outside the window, then clipped.
    """
    lp = parent_intensity(eta, eps)
    rng = _rng(seed)
    big = Region(region.side + 2 * eps, region.x0 - eps, region.y0 - eps)
    parents = _ppp_array(lp, big, rng)
    marks = rng.random(len(parents))
    if eps > 0 and len(parents) > 1:
        tree = cKDTree(parents)
        keep = np.ones(len(parents), dtype=bool)
        for i, j in tree.query_pairs(eps, output_type="ndarray"):
            # the larger mark of each close pair is removed
            if marks[i] < marks[j]:
                keep[j] = False
            else:
                keep[i] = False
        parents = parents[keep]
    inside = region.contains(parents) if len(parents) else np.zeros(0, dtype=bool)
    return Deployment(parents[inside], eps, region, parent_intensity=lp)


def equivalent_ppp_intensity(eta: float, eps: float) -> float:
    """Intensity of the Poisson process standing in for the hard-core deployment.

    Intensity matching: the equivalent process keeps the deployment density.
    ``eps`` is accepted for interface symmetry and validated only.
    """
    if eta < 0:
        raise DomainError("eta must be nonnegative")
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    return float(eta)


def distances_from(origin, points: Sequence) -> np.ndarray:
    """Sorted Euclidean distances from ``origin``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.size == 0:
        return np.zeros(0)
    o = np.asarray(origin, dtype=float)
    return np.sort(np.hypot(pts[:, 0] - o[0], pts[:, 1] - o[1]))


def uniform_in_disc(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform in a disc centred at the origin."""
    r = radius * np.sqrt(rng.random(n))
    th = 2 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def deployment_to_csv(dep: Deployment) -> str:
    lines = ["x,y"]
    lines += [f"{x!r},{y!r}" for x, y in dep.positions.tolist()]
    return "\n".join(lines) + "\n"
