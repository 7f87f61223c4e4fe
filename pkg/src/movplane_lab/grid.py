"""Uniform cell-centred lattices with exact reflection maps.

Nodes sit at ``(k + 1/2) h`` along every axis, so a plane ``x_a = m h`` never
contains a node and reflection across it is a pure index permutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GridError(ValueError):
    """Invalid lattice parameters."""


class OutOfLattice(IndexError):
    """A reflected node falls outside the lattice."""


@dataclass(frozen=True)
class Grid:
    """Symmetric box lattice ``[-radius, radius]^dim`` with spacing ``h``.

    Attributes:
        dim: spatial dimension (1 or 2)
        h: node spacing
        radius: half-width of the box; the cells tile the box exactly
        n: nodes per axis
    """

    dim: int
    h: float
    radius: float
    n: int = field(init=False)

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if not self.h > 0:
            raise GridError(f"h must be positive, got {self.h}")
        if not self.radius > 0:
            raise GridError(f"radius must be positive, got {self.radius}")
        ratio = 2.0 * self.radius / self.h
        n = int(round(ratio))
        if n < 2 or abs(ratio - n) > 1e-9 * max(1.0, ratio) or n % 2:
            raise GridError(
                f"2*radius/h must be an even integer, got {ratio!r} "
                f"(radius={self.radius}, h={self.h})"
            )
        object.__setattr__(self, "n", n)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def axis(self) -> np.ndarray:
        """Node coordinates along one axis (identical for every axis)."""
        k = np.arange(self.n) - self.n // 2
        return (k + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays shaped like the lattice, ``indexing='ij'``."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @property
    def points(self) -> np.ndarray:
        """``(size, dim)`` array of node coordinates in row-major order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    def norm2(self, center: Sequence[float] | None = None) -> np.ndarray:
        """Squared distance of every node to ``center`` (lattice-shaped)."""
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        return sum((m - ci) ** 2 for m, ci in zip(self.mesh(), c))

    def in_ball(self, r: float = 1.0) -> np.ndarray:
        """Boolean mask of nodes strictly inside the centred ball ``B_r``."""
        return self.norm2() < r * r

    def plane_index(self, lam: float) -> int:
        """Integer ``m`` with ``lam == m*h``; raises if ``lam`` is off-grid."""
        m = lam / self.h
        mi = int(round(m))
        if abs(m - mi) > 1e-9:
            raise GridError(f"plane offset {lam} is not a multiple of h={self.h}")
        return mi

    def axis_index(self, x: float) -> int:
        """Array index of the node at coordinate ``x`` along an axis."""
        k = x / self.h - 0.5
        ki = int(round(k))
        if abs(k - ki) > 1e-9:
            raise GridError(f"{x} is not a node coordinate")
        i = ki + self.n // 2
        if not 0 <= i < self.n:
            raise OutOfLattice(f"coordinate {x} outside lattice")
        return i


@dataclass(frozen=True)
class PlaneReflection:
    """The hyperplane ``x[axis] = lam`` and the map ``x -> x^lam``."""

    axis: int
    lam: float

    def reflect(self, x: Sequence[float]) -> np.ndarray:
        y = np.array(x, dtype=float)
        y[..., self.axis] = 2.0 * self.lam - y[..., self.axis]
        return y


def build_grid(dim: int, radius: float, h: float) -> Grid:
    return Grid(dim=dim, h=float(h), radius=float(radius))


def _check_plane(grid: Grid, plane: PlaneReflection) -> int:
    if not 0 <= plane.axis < grid.dim:
        raise GridError(f"axis {plane.axis} out of range for dim={grid.dim}")
    return grid.plane_index(plane.lam)


def reflect_axis_indices(grid: Grid, plane: PlaneReflection) -> np.ndarray:
    """Per-axis index map ``i -> i'`` for the reflection; ``-1`` when outside."""
    m = _check_plane(grid, plane)
    i = np.arange(grid.n)
    j = 2 * m - 1 - i + grid.n
    return np.where((j >= 0) & (j < grid.n), j, -1)


def reflection_map(grid: Grid, plane: PlaneReflection) -> np.ndarray:
    """Flat-index image of every node (``-1`` where the image leaves the lattice)."""
    amap = reflect_axis_indices(grid, plane)
    idx = np.indices(grid.shape)
    img = idx.copy()
    img[plane.axis] = amap[idx[plane.axis]]
    valid = img[plane.axis] >= 0
    flat = np.ravel_multi_index(tuple(np.where(valid, img, 0)), grid.shape)
    return np.where(valid, flat, -1).ravel()


def reflect_index(grid: Grid, plane: PlaneReflection, node: int | tuple[int, ...]) -> int | tuple[int, ...]:
    """Index of the reflected node; same form (flat int or tuple) as ``node``."""
    amap = reflect_axis_indices(grid, plane)
    as_tuple = isinstance(node, tuple)
    multi = list(node) if as_tuple else list(np.unravel_index(int(node), grid.shape))
    if len(multi) != grid.dim:
        raise GridError(f"node index {node} does not match dim={grid.dim}")
    j = int(amap[multi[plane.axis]])
    if j < 0:
        raise OutOfLattice(f"reflection of node {node} across {plane} leaves the lattice")
    multi[plane.axis] = j
    if as_tuple:
        return tuple(int(v) for v in multi)
    return int(np.ravel_multi_index(tuple(multi), grid.shape))


def side_mask(grid: Grid, plane: PlaneReflection, side: str = "minus") -> np.ndarray:
    """Nodes of ``Sigma_lam`` (``x_axis < lam``) or of its mirror half-space."""
    x = grid.mesh()[plane.axis]
    if side == "minus":
        return x < plane.lam
    if side == "plus":
        return x > plane.lam
    raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")


def radial_average(values: np.ndarray, grid: Grid, center: Sequence[float] | None = None,
                   bin_width: float | None = None) -> list[tuple[float, float, float]]:
    """Group node values by distance to ``center``.

    With ``bin_width=None`` (default) every shell holds nodes at exactly the same
    distance, so any function of ``|x - center|`` has zero deviation. A positive
    ``bin_width`` gives fixed-width radial bins instead.

    Returns a list of ``(r, mean, max |value - mean|)`` sorted by ``r``.
    """
    v = np.asarray(values, dtype=float).reshape(grid.shape)
    if v.size == 0:
        raise ValueError("empty field")
    c = np.zeros(grid.dim) if center is None else np.asarray(center, float)
    if np.any(np.abs(c) > grid.radius):
        raise ValueError(f"center {c} outside lattice")
    d2 = grid.norm2(c).ravel()
    if bin_width is None:
        # squared distances are multiples of (h/2)^2 when center sits on the half grid
        key = np.round(d2 / (0.25 * grid.h * grid.h) * 64.0).astype(np.int64)
    else:
        key = np.floor(np.sqrt(d2) / bin_width).astype(np.int64)
    order = np.argsort(key, kind="stable")
    key_s = key[order]
    vals = v.ravel()[order]
    r_s = np.sqrt(d2[order])
    bounds = np.flatnonzero(np.diff(key_s)) + 1
    out = []
    for seg_v, seg_r in zip(np.split(vals, bounds), np.split(r_s, bounds)):
        mean = float(seg_v.mean())
        out.append((float(seg_r.mean()), mean, float(np.max(np.abs(seg_v - mean)))))
    return out
