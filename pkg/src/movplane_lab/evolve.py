"""Explicit time stepping for  u_t + (-Delta)^s u = f(t, u)  and the comparison ODE."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .fraclap import ExteriorSpec, Field, KernelMatrix
from .grid import Grid

log = logging.getLogger(__name__)

ScalarFn = Callable[[float, np.ndarray], np.ndarray]


class IntegrationDiverged(FloatingPointError):
    """A non-finite value appeared during time stepping."""


@dataclass(frozen=True)
class Nonlinearity:
    """Reaction term with the constants the analysis needs.

    ``L`` bounds ``|f_u|`` on the range of interest, ``sigma`` is the decay margin
    ``f_u(t, 0) < -sigma`` (0 when not applicable), ``eps_band`` the largest
    ``eps`` with ``f_u(t, eta) < -sigma`` for ``0 < eta < eps``. ``alpha`` is the
    Hoelder-in-time exponent, kept as metadata.
    """

    name: str
    f: ScalarFn
    f_u: ScalarFn
    L: float
    sigma: float = 0.0
    alpha: float = 0.5
    eps_band: float = math.inf
    params: dict = field(default_factory=dict)

    def __call__(self, t: float, u: np.ndarray) -> np.ndarray:
        return self.f(t, u)

    def check_lipschitz(self, rng: np.random.Generator, umax: float, n: int = 200) -> bool:
        t = rng.uniform(0, 10, n)
        u, v = rng.uniform(-umax, umax, (2, n))
        lhs = np.abs(self.f(t, u) - self.f(t, v))
        return bool(np.all(lhs <= self.L * np.abs(u - v) * (1 + 1e-12) + 1e-15))

    def check_decay(self, rng: np.random.Generator, n: int = 50) -> bool:
        """Whole-space condition: ``f(t,0) = 0`` and ``f_u(t,0) < -sigma``."""
        t = rng.uniform(0, 10, n)
        z = np.zeros(n)
        return bool(np.all(self.f(t, z) == 0) and np.all(self.f_u(t, z) < -self.sigma))

    def check_ball(self, rng: np.random.Generator, n: int = 50) -> bool:
        """Ball condition ``f(t, 0) >= 0``."""
        t = rng.uniform(0, 10, n)
        return bool(np.all(self.f(t, np.zeros(n)) >= 0))


def _poly(name: str, coeffs: dict[int, float], L: float, sigma: float = 0.0,
          eps_band: float = math.inf, **params) -> Nonlinearity:
    def f(t, u):
        u = np.asarray(u, dtype=float)
        return sum(c * u**p for p, c in coeffs.items())

    def f_u(t, u):
        u = np.asarray(u, dtype=float)
        return sum(c * p * u ** (p - 1) for p, c in coeffs.items()) + 0.0 * u

    return Nonlinearity(name, f, f_u, L=L, sigma=sigma, eps_band=eps_band,
                        params={"coeffs": {str(k): v for k, v in coeffs.items()}, **params})


def schrodinger(p: int = 3, scale: float = 1.0, umax: float = 1.5, sigma: float = 0.5) -> Nonlinearity:
    """``f(u) = scale * (u^p - u)``; ``f_u(0) = -scale``."""
    if scale <= sigma:
        raise ValueError("need scale > sigma so that f_u(t,0) < -sigma")
    # f_u(eta) = scale*(p eta^{p-1} - 1) < -sigma  <=>  eta < ((1 - sigma/scale)/p)^{1/(p-1)}
    band = ((1.0 - sigma / scale) / p) ** (1.0 / (p - 1))
    L = scale * max(1.0, p * umax ** (p - 1) - 1.0)
    name = f"schrodinger-p{p}" if scale == 1.0 else f"schrodinger-p{p}-x{scale:g}"
    return _poly(name, {p: scale, 1: -scale}, L=L, sigma=sigma, eps_band=band, p=p, scale=scale)


def linear_decay(rate: float = 1.0) -> Nonlinearity:
    """``f(u) = -rate * u``; the decay margin is taken as ``rate`` itself."""
    return _poly("linear-decay" if rate == 1.0 else f"linear-decay-{rate:g}", {1: -rate},
                 L=rate, sigma=rate, rate=rate)


def ball_logistic(scale: float = 1.0, umax: float = 1.5) -> Nonlinearity:
    """``f(u) = scale * (u - u^3)``, so ``f(t, 0) = 0 >= 0``."""
    L = scale * max(1.0, 3 * umax**2 - 1.0)
    name = "ball-logistic" if scale == 1.0 else f"ball-logistic-x{scale:g}"
    return _poly(name, {1: scale, 3: -scale}, L=L, scale=scale)


def zero_reaction() -> Nonlinearity:
    return _poly("zero", {}, L=0.0)


# --- trajectories ----------------------------------------------------------------


@dataclass
class Trajectory:
    """Snapshots of one run. ``values`` has shape ``(n_snapshots, grid.size)``."""

    grid: Grid
    s: float
    ext: ExteriorSpec
    nl: Nonlinearity
    times: np.ndarray
    values: np.ndarray
    dt: float
    ring_max: np.ndarray
    residual_bound: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def field(self, k: int) -> Field:
        return Field(self.grid, self.values[k], float(self.times[k]), self.ext)

    @property
    def snapshots(self) -> list[tuple[float, Field]]:
        return [(float(t), self.field(k)) for k, t in enumerate(self.times)]

    @property
    def sup_norms(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)

    def tail(self, t0: float) -> "Trajectory":
        keep = self.times >= t0
        return Trajectory(self.grid, self.s, self.ext, self.nl, self.times[keep], self.values[keep],
                          self.dt, self.ring_max[keep], self.residual_bound[keep])

    @classmethod
    def from_arrays(cls, grid: Grid, times, values, s: float = 0.5, ext: ExteriorSpec | None = None,
                    nl: Nonlinearity | None = None) -> "Trajectory":
        """Wrap synthetic data (no diagnostics) as a trajectory."""
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float).reshape(len(times), -1)
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        z = np.zeros(len(times))
        return cls(grid, s, ext or ExteriorSpec(), nl or zero_reaction(), times, values, 0.0, z, z.copy())


def stable_dt(kernel: KernelMatrix, nl: Nonlinearity | float) -> float:
    """``0.9 / (max row sum + L)``: keeps every explicit-Euler coefficient nonnegative."""
    L = nl if isinstance(nl, (int, float)) else nl.L
    return 0.9 / (kernel.max_row_sum + L)


def _active_mask(kernel: KernelMatrix) -> np.ndarray:
    g = kernel.grid
    if kernel.ext.kind == "zero" and kernel.ext.ball_radius is not None:
        return g.in_ball(kernel.ext.ball_radius).ravel()
    return np.ones(g.size, dtype=bool)


def _ring_mask(grid: Grid) -> np.ndarray:
    idx = np.indices(grid.shape)
    return np.any((idx == 0) | (idx == grid.n - 1), axis=0).ravel()


def step_explicit(fld: Field, t: float, dt: float, kernel: KernelMatrix, nl: Nonlinearity) -> Field:
    """One forward-Euler step; the exterior condition is re-imposed afterwards."""
    u = fld.flat
    new = u + dt * (nl.f(t, u) - kernel.apply(u))
    active = _active_mask(kernel)
    new[~active] = 0.0
    if not np.all(np.isfinite(new)):
        raise IntegrationDiverged(f"non-finite values after step at t={t:.6g}")
    return Field(fld.grid, new, t + dt, fld.ext)


def evolve(field0: Field, nl: Nonlinearity, kernel: KernelMatrix, T: float, snap_every: float,
           dt: float | None = None) -> Trajectory:
    """Integrate to time ``T`` (from ``field0.t``), storing snapshots every ``snap_every``.

    Steps land exactly on snapshot times; inactive nodes (outside the ball) are
    never touched, which keeps them exactly zero.
    """
    grid = kernel.grid
    if field0.grid != grid:
        raise ValueError("initial field and kernel live on different grids")
    u0 = field0.flat.copy()
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial data must be finite")
    active = _active_mask(kernel)
    if np.any(u0[~active] != 0):
        raise ValueError("initial data must vanish outside the ball")
    dt = stable_dt(kernel, nl) if dt is None else float(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    # restricting to active nodes is exact: inactive values are identically zero
    A = np.ascontiguousarray(kernel.A[np.ix_(active, active)])
    diag = kernel.diag[active]
    ring = _ring_mask(grid)
    tail_max = float(np.max(kernel.tail))

    t0 = float(field0.t)
    n_snap = int(math.floor((T - t0) / snap_every + 1e-9))
    snap_times = t0 + snap_every * np.arange(n_snap + 1)
    if snap_times[-1] < T - 1e-12:
        snap_times = np.append(snap_times, T)
    values = np.zeros((len(snap_times), grid.size))
    ring_max = np.zeros(len(snap_times))

    v = u0[active]
    full = np.zeros(grid.size)
    t = t0
    values[0] = u0
    ring_max[0] = np.max(np.abs(u0[ring]))
    for k in range(1, len(snap_times)):
        target = snap_times[k]
        while t < target - 1e-12:
            step = min(dt, target - t)
            v = v + step * (nl.f(t, v) - (diag * v - A @ v))
            t = t + step
            if not np.all(np.isfinite(v)):
                raise IntegrationDiverged(f"non-finite values at t={t:.6g}")
        t = target
        full[active] = v
        values[k] = full
        ring_max[k] = np.max(np.abs(full[ring]))
    return Trajectory(grid, kernel.order.s, kernel.ext, nl, snap_times, values, dt, ring_max,
                      ring_max * tail_max)


# --- comparison ODE --------------------------------------------------------------


@dataclass
class XiReport:
    status: str  # PASS | FAIL | NOT-APPLICABLE
    t: np.ndarray
    xi: np.ndarray
    bound: np.ndarray
    max_ratio: float
    min_value: float


def ode_xi(nl: Nonlinearity, t_k: float, eps0: float, T: float, tol: float = 1e-6,
           n_samples: int = 2001) -> XiReport:
    """Integrate ``xi' = f(t + t_k, xi), xi(0) = eps0`` and test ``0 < xi <= eps0 e^{-sigma t}``."""
    t = np.linspace(0.0, T, n_samples)
    if not 0.0 < eps0 < nl.eps_band or nl.sigma <= 0:
        z = np.zeros_like(t)
        return XiReport("NOT-APPLICABLE", t, z + eps0, z, math.nan, eps0)
    sol = solve_ivp(lambda tt, y: nl.f(tt + t_k, y), (0.0, T), [eps0], method="RK45",
                    t_eval=t, rtol=1e-10, atol=1e-12 * eps0 * math.exp(-nl.L * T))
    if not sol.success:
        raise IntegrationDiverged(sol.message)
    xi = sol.y[0]
    bound = eps0 * np.exp(-nl.sigma * t)
    ratio = float(np.max(xi / bound))
    ok = bool(np.all(xi > 0) and np.all(xi <= bound * (1 + tol)))
    return XiReport("PASS" if ok else "FAIL", t, xi, bound, ratio, float(xi.min()))


def divided_difference(nl: Nonlinearity, t: float, u_ref: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``(f(t,u_ref) - f(t,u)) / (u_ref - u)`` with ``f_u`` on the removable set."""
    du = u_ref - u
    small = np.abs(du) < 1e-12
    safe = np.where(small, 1.0, du)
    c = (nl.f(t, u_ref) - nl.f(t, u)) / safe
    return np.where(small, nl.f_u(t, u), c)
