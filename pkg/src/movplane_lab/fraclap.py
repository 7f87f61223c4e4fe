"""Dense discrete fractional Laplacian on a cell-centred lattice.

The operator is discretised in the difference form

    out_i = sum_{j != i} A_ij (u_i - u_j) + b_i (u_i - u_ext)

where ``A_ij = W_ij + near`` on nearest neighbours. ``W_ij`` is the exact integral
of ``C_{N,s} |x_i - y|^{-N-2s}`` over the cell of node ``j``, ``b_i`` collects the
exterior integral beyond the box (``tail``) and near-field weights pointing out of
the lattice. The nearest-neighbour weight ``near`` carries the principal-value
correction of the singular cell: a second-difference surrogate whose coefficient
makes the scheme exact on quadratics, which gives second-order consistency on
smooth data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .grid import Grid, GridError, PlaneReflection, reflection_map

EXTERIOR_KINDS = ("zero", "decay")


def c_norm(dim: int, s: float) -> float:
    """Constant making (-Delta)^s the Fourier multiplier |xi|^{2s}."""
    return s * 4.0**s * math.gamma(dim / 2 + s) / (math.pi ** (dim / 2) * math.gamma(1 - s))


@dataclass(frozen=True)
class FracOrder:
    s: float
    dim: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")

    @property
    def c_norm(self) -> float:
        return c_norm(self.dim, self.s)


@dataclass(frozen=True)
class ExteriorSpec:
    """What the field is outside the computed region.

    ``zero``: Dirichlet complement; with ``ball_radius`` set, nodes outside the ball
    are held at zero too. ``decay``: truncated whole space, zero beyond the lattice.
    """

    kind: str = "zero"
    ball_radius: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in EXTERIOR_KINDS:
            raise ValueError(f"exterior kind must be one of {EXTERIOR_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class Field:
    """Values on the nodes of ``grid`` at time ``t``."""

    grid: Grid
    values: np.ndarray
    t: float = 0.0
    ext: ExteriorSpec = field(default_factory=ExteriorSpec)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise GridError(f"field has {v.size} values, grid has {self.grid.size} nodes")
        object.__setattr__(self, "values", v.reshape(self.grid.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values: np.ndarray, t: float | None = None) -> "Field":
        return Field(self.grid, values, self.t if t is None else t, self.ext)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray], t: float = 0.0,
                      ext: ExteriorSpec | None = None) -> "Field":
        vals = np.broadcast_to(fn(*grid.mesh()), grid.shape).astype(float)
        return cls(grid, vals, t, ext or ExteriorSpec())


# --- quadrature tables (unit spacing; scale by h^{-2s}) -------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _cell_nodes(centers: np.ndarray, sub: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for unit intervals centred at ``centers``."""
    k = (np.arange(sub) + 0.5) / sub - 0.5
    x = (_GL_X / 2.0)[None, :] / sub + k[:, None]
    w = np.broadcast_to(_GL_W[None, :] / 2.0 / sub, x.shape)
    return centers[:, None] + x.ravel()[None, :], np.tile(w.ravel(), (len(centers), 1))


def _cell_integrals_2d(p: np.ndarray, q: np.ndarray, fn: Callable, sub: int) -> np.ndarray:
    yp, wp = _cell_nodes(p.astype(float), sub)
    yq, wq = _cell_nodes(q.astype(float), sub)
    vals = fn(p[:, None, None], yp[:, :, None], yq[:, None, :])
    return np.einsum("ki,kj,kij->k", wp, wq, vals)


@lru_cache(maxsize=None)
def unit_weight_table(dim: int, s: float, n: int) -> np.ndarray:
    """``int_cell |y|^{-dim-2s}`` for cells at integer offsets ``0..n-1`` per axis.

    Entry at offset zero is set to 0 (the singular cell is handled separately).
    """
    if dim == 1:
        p = np.arange(1, n, dtype=float)
        w = ((p - 0.5) ** (-2 * s) - (p + 0.5) ** (-2 * s)) / (2 * s)
        return np.concatenate([[0.0], w])
    P, Q = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    out = np.zeros(P.size)
    kern = lambda _p, y1, y2: (y1 * y1 + y2 * y2) ** (-1.0 - s)
    near = (np.maximum(P, Q) <= 3) & ~((P == 0) & (Q == 0))
    far = np.maximum(P, Q) > 3
    if near.any():
        out[near] = _cell_integrals_2d(P[near], Q[near], kern, sub=8)
    if far.any():
        out[far] = _cell_integrals_2d(P[far], Q[far], kern, sub=1)
    return out.reshape(n, n)


def _face_tail_integral(s: float, R: float) -> float:
    """Quadratic-consistency lattice-sum remainder beyond half-width ``R`` (2D)."""
    F = integrate.quad(lambda y: (R * R + y * y) ** (-1.0 - s), -R, R, epsabs=1e-14)[0]
    return (-4.0 * R * F - exterior_integral_2d(np.zeros((1, 2)), R, s)[0]) / 12.0


@lru_cache(maxsize=None)
def near_coefficient(dim: int, s: float, extent: int = 300) -> float:
    """Lattice sum ``a`` such that the near correction makes the scheme exact on quadratics.

    ``a = sum over all unit cells of int_cell (y_1^2 - r_1^2) |y|^{-dim-2s} dy``
    with ``r`` the cell centre. Summed to ``extent`` cells, remainder added in
    closed form from the leading Euler-Maclaurin term.
    """
    R = extent + 0.5
    if dim == 1:
        own = 2.0 * 0.5 ** (2 - 2 * s) / (2 - 2 * s)
        p = np.arange(1, extent + 1, dtype=float)
        y, w = _cell_nodes(p, sub=2)
        vals = (y * y - p[:, None] ** 2) * y ** (-1.0 - 2 * s)
        body = 2.0 * np.sum(w * vals)
        rem = -(1.0 + 4.0 * s) * R ** (-2 * s) / (12.0 * s)
        return own + body + rem
    # own cell: (1/2) int_{square} |y|^{-2s}, done in polar over 8 triangles
    own = 0.5 * 8.0 * integrate.quad(
        lambda th: (0.5 / math.cos(th)) ** (2 - 2 * s) / (2 - 2 * s), 0.0, math.pi / 4, epsabs=1e-14
    )[0]
    P, Q = np.meshgrid(np.arange(extent + 1), np.arange(extent + 1), indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    keep = ~((P == 0) & (Q == 0))
    P, Q = P[keep], Q[keep]
    mult = np.where(P > 0, 2.0, 1.0) * np.where(Q > 0, 2.0, 1.0)
    g = lambda p, y1, y2: (y1 * y1 - p * p) * (y1 * y1 + y2 * y2) ** (-1.0 - s)
    body = 0.0
    near = np.maximum(P, Q) <= 3
    body += np.sum(mult[near] * _cell_integrals_2d(P[near], Q[near], g, sub=8))
    chunk = 20000
    idx = np.flatnonzero(~near)
    for k in range(0, idx.size, chunk):
        sl = idx[k:k + chunk]
        body += np.sum(mult[sl] * _cell_integrals_2d(P[sl], Q[sl], g, sub=1))
    return own + body + _face_tail_integral(s, R)


def _int_cos_pow(b: np.ndarray, s: float) -> np.ndarray:
    """``int_0^b cos(phi)^{2s} dphi`` for ``|b| <= pi/2`` (odd in ``b``)."""
    a, c = 0.5, s + 0.5
    val = 0.5 * special.betainc(a, c, np.sin(b) ** 2) * special.beta(a, c)
    return np.sign(b) * val


def exterior_integral_2d(pts: np.ndarray, R: float, s: float) -> np.ndarray:
    """``int_{|y|_inf > R} |x - y|^{-2-2s} dy`` for points ``x`` inside the box.

    Polar form ``(1/2s) int rho(theta)^{-2s} dtheta`` with ``rho`` the distance to the
    box along ``theta``; on each face ``rho = d / cos(phi)`` integrates in closed form.
    """
    pts = np.atleast_2d(pts)
    total = np.zeros(len(pts))
    for ax in range(2):
        other = 1 - ax
        for sign in (1.0, -1.0):
            d = R - sign * pts[:, ax]
            lo = np.arctan2(-R - sign * pts[:, other], d)
            hi = np.arctan2(R - sign * pts[:, other], d)
            total += d ** (-2 * s) * np.abs(_int_cos_pow(hi, s) - _int_cos_pow(lo, s))
    return total / (2 * s)


def exterior_integral(grid: Grid, s: float) -> np.ndarray:
    """Unnormalised exterior integral of the kernel for every node (flat)."""
    R = grid.radius
    if grid.dim == 1:
        x = grid.axis
        return ((R - x) ** (-2 * s) + (R + x) ** (-2 * s)) / (2 * s)
    return exterior_integral_2d(grid.points, R, s)


# --- kernel matrix --------------------------------------------------------------


@dataclass(frozen=True)
class KernelMatrix:
    """Dense discrete (-Delta)^s on one grid.

    Attributes:
        W: cell-integrated kernel weights (symmetric, zero diagonal)
        near: principal-value correction weight added on nearest neighbours
        tail: kernel mass beyond the lattice box, per node
        A: effective off-diagonal weights ``W + near * adjacency``
        boundary: ``tail`` plus near weights that point outside the lattice
        diag: ``A.sum(1) + boundary``
    """

    grid: Grid
    order: FracOrder
    ext: ExteriorSpec
    W: np.ndarray = field(repr=False)
    near: float
    tail: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)

    @property
    def max_row_sum(self) -> float:
        return float(np.max(self.diag))

    def apply(self, u: np.ndarray, ext_value: float = 0.0) -> np.ndarray:
        """Apply to a flat or lattice-shaped array; returns the same shape."""
        uf = np.asarray(u, dtype=float).reshape(-1)
        out = self.diag * uf - self.A @ uf
        if ext_value:
            out -= self.boundary * ext_value
        return out.reshape(np.shape(u))

    def apply_many(self, U: np.ndarray) -> np.ndarray:
        """Apply to the rows of ``U`` (shape ``(k, size)``)."""
        return U * self.diag[None, :] - U @ self.A


def _neighbour_adjacency(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbour adjacency (dense) and count of neighbours inside the lattice."""
    M = grid.size
    adj = np.zeros((M, M))
    idx = np.arange(M).reshape(grid.shape)
    count = np.zeros(grid.shape)
    for ax in range(grid.dim):
        a = np.moveaxis(idx, ax, 0)
        i0, i1 = a[:-1].ravel(), a[1:].ravel()
        adj[i0, i1] = 1.0
        adj[i1, i0] = 1.0
        c = np.moveaxis(count, ax, 0)
        c[:-1] += 1
        c[1:] += 1
    return adj, count.ravel()


def build_kernel(grid: Grid, order: FracOrder | float, ext: ExteriorSpec | None = None) -> KernelMatrix:
    """Assemble the dense operator for ``grid``."""
    if not isinstance(order, FracOrder):
        order = FracOrder(float(order), grid.dim)
    if order.dim != grid.dim:
        order = FracOrder(order.s, grid.dim)
    ext = ext or ExteriorSpec()
    s, C, h = order.s, order.c_norm, grid.h
    scale = C * h ** (-2 * s)
    table = unit_weight_table(grid.dim, s, grid.n)
    idx = np.indices(grid.shape).reshape(grid.dim, -1)
    if grid.dim == 1:
        W = table[np.abs(idx[0][:, None] - idx[0][None, :])]
    else:
        W = table[np.abs(idx[0][:, None] - idx[0][None, :]), np.abs(idx[1][:, None] - idx[1][None, :])]
    W = scale * W
    near = 0.5 * scale * near_coefficient(grid.dim, s)
    tail = C * exterior_integral(grid, s)
    adj, count = _neighbour_adjacency(grid)
    A = W + near * adj
    boundary = tail + near * (2 * grid.dim - count)
    diag = A.sum(axis=1) + boundary
    return KernelMatrix(grid, order, ext, W, near, tail, A, boundary, diag)


def frac_lap_apply(kernel: KernelMatrix, fld: Field, ext_value: float = 0.0) -> Field:
    if fld.grid != kernel.grid:
        raise GridError("field and kernel live on different grids")
    return fld.with_values(kernel.apply(fld.values, ext_value))


# --- closed-form oracles ----------------------------------------------------------


def bump(x: np.ndarray | Sequence[np.ndarray], s: float, delta: float = 1.0,
         center: Sequence[float] | None = None) -> np.ndarray:
    """``(delta^2 - |x - center|^2)_+^s``.

    ``x`` is one coordinate array (1D) or a sequence of arrays, one per axis.
    """
    xs = [np.asarray(x, float)] if isinstance(x, np.ndarray) else [np.asarray(a, float) for a in x]
    c = np.zeros(len(xs)) if center is None else np.asarray(center, float)
    r2 = sum((a - ci) ** 2 for a, ci in zip(xs, c))
    return np.maximum(delta * delta - r2, 0.0) ** s


def bump_constant_exact(dim: int, s: float) -> float:
    """Closed form of ``(-Delta)^s (1-|x|^2)_+^s`` inside the unit ball."""
    return 4.0**s * math.gamma(1 + s) * math.gamma(dim / 2 + s) / math.gamma(dim / 2)


@lru_cache(maxsize=None)
def bump_constant_quadrature(s: float) -> float:
    """Independent 1D value of ``(-Delta)^s (1-x^2)_+^s`` at the origin.

    Symmetrised principal value ``2 C int_0^inf (1 - phi(y)) y^{-1-2s} dy`` by
    adaptive quadrature; the integrand is bounded near 0 since ``1 - phi ~ s y^2``.
    """
    C = c_norm(1, s)
    inner = integrate.quad(lambda y: -math.expm1(s * math.log1p(-y * y)) * y ** (-1 - 2 * s),
                           0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    outer = 1.0 / (2 * s)  # int_1^inf y^{-1-2s}
    return 2.0 * C * (inner + outer)


@lru_cache(maxsize=None)
def step_constant(s: float, dim: int = 1) -> float:
    """``C`` in ``(-Delta)^s h = C / x_1^{2s}`` for the sign step ``h``.

    Dimensional reduction: ``Cbar = C_{N,s} int_{R^{N-1}} (1+|z'|^2)^{-(N+2s)/2} dz'``,
    then ``C = 2 Cbar int_{-inf}^0 (1-z)^{-1-2s} dz``.
    """
    C = c_norm(dim, s)
    if dim == 1:
        cbar = C
    elif dim == 2:
        cbar = C * integrate.quad(lambda z: (1 + z * z) ** (-(2 + 2 * s) / 2), -np.inf, np.inf,
                                  epsabs=1e-13)[0]
    else:
        raise ValueError("dim must be 1 or 2")
    tail = integrate.quad(lambda z: (1 - z) ** (-1 - 2 * s), -np.inf, 0.0, epsabs=1e-13)[0]
    return 2.0 * cbar * tail


def step_oracle(order: FracOrder | float, x1: float | np.ndarray) -> float | np.ndarray:
    """``C(s) / x1^{2s}``, the fractional Laplacian of the sign step at ``x1 > 0``."""
    if not isinstance(order, FracOrder):
        order = FracOrder(float(order))
    x1a = np.asarray(x1, dtype=float)
    if np.any(x1a <= 0):
        raise ValueError("step_oracle needs x1 > 0")
    out = step_constant(order.s, order.dim) * x1a ** (-2 * order.s)
    return float(out) if np.ndim(out) == 0 else out


def barrier_g_eval(delta: float, xbar: Sequence[float], plane: PlaneReflection,
                   order: FracOrder | float, x: np.ndarray | Sequence[np.ndarray]) -> np.ndarray:
    """Antisymmetric double bump ``(delta^2-|x-xbar|^2)_+^s - (delta^2-|x-xbar^lam|^2)_+^s``.

    ``x`` is a sequence of coordinate arrays (one per axis), a ``(..., dim)`` point
    array, or in 1D a plain coordinate array.
    """
    s = order.s if isinstance(order, FracOrder) else float(order)
    xbar = np.asarray(xbar, dtype=float)
    dist = plane.lam - xbar[plane.axis]
    if delta <= 0 or abs(dist) < delta:
        raise ValueError(f"ball B_{delta}({xbar.tolist()}) meets the plane x_{plane.axis} = {plane.lam}")
    if isinstance(x, np.ndarray):
        x = np.atleast_1d(x)
        coords = [x] if xbar.size == 1 and x.shape[-1] != 1 else [x[..., k] for k in range(xbar.size)]
    else:
        coords = list(x)
    return bump(coords, s, delta, xbar) - bump(coords, s, delta, plane.reflect(xbar))


# --- modified antisymmetric difference ------------------------------------------------


def w_tilde_modify(w_mu: Field, mu: float, axis: int = 0, lam: float = 0.0) -> Field:
    """Make ``w_mu`` (antisymmetric about ``x_axis = mu``) antisymmetric about ``x_axis = lam``.

    Keeps ``w_mu`` for ``x > mu``, sets 0 on ``[2 lam - mu, mu]`` and uses the shifted copy
    ``w_mu(x + 2(mu - lam))`` for ``x < 2 lam - mu``. Shifted nodes beyond the
    lattice read the zero exterior.
    """
    grid = w_mu.grid
    m_mu, m_lam = grid.plane_index(mu), grid.plane_index(lam)
    shift = 2 * (m_mu - m_lam)
    if shift < 0:
        raise ValueError(f"need mu >= lam, got mu={mu}, lam={lam}")
    v = np.moveaxis(w_mu.values, axis, 0)
    out = np.zeros_like(v)
    i = np.arange(grid.n)
    x = grid.axis
    right = x > mu
    left = x < 2 * lam - mu
    out[right] = v[right]
    src = i[left] + shift
    ok = src < grid.n
    out[i[left][ok]] = v[src[ok]]
    return w_mu.with_values(np.moveaxis(out, 0, axis))


@dataclass
class SignCheck:
    status: str  # PASS | FAIL | NOT-APPLICABLE
    max_difference: float
    hypothesis: str


def sign_check_A2(w_mu: Field, mu: float, kernel: KernelMatrix, axis: int = 0) -> SignCheck:
    """Max over ``x_axis > mu`` of ``(-Delta)^s w~_mu - (-Delta)^s w_mu``; PASS iff negative.

    Requires ``w_mu < 0`` at every node left of ``T_mu``; otherwise NOT-APPLICABLE.
    """
    if w_mu.grid != kernel.grid:
        raise GridError("field and kernel live on different grids")
    x = kernel.grid.mesh()[axis].ravel()
    left = x < mu
    wt = w_tilde_modify(w_mu, mu, axis)
    diff = kernel.apply(wt.flat) - kernel.apply(w_mu.flat)
    right = x > mu
    mx = float(diff[right].max()) if right.any() else math.nan
    if not left.any() or np.any(w_mu.flat[left] >= 0):
        return SignCheck("NOT-APPLICABLE", mx, "w_mu is not negative at every node left of the plane")
    return SignCheck("PASS" if mx < 0 else "FAIL", mx, "met")
