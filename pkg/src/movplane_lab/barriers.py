"""Barrier and subsolution constructions for the moving-plane argument, with numerical
checks of the inequalities that make them work.

Conventions: the plane is ``T_lam = {x_axis = lam}`` (``lam = 0`` unless stated),
``Sigma~_lam = {x_axis > lam}`` is the half-space where the reflected difference
is studied, and every field is zero beyond the lattice (truncated whole space).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .fraclap import Field, KernelMatrix, bump, w_tilde_modify
from .grid import Grid, PlaneReflection, reflection_map
from .movplane import LinearSetup, _antisym_operator, evolve_linear

PASS, FAIL, NA = "PASS", "FAIL", "NOT-APPLICABLE"

Coefficient = np.ndarray | Callable[[float], np.ndarray]


class BarrierSpecError(ValueError):
    """Barrier parameters violate a structural requirement."""


# --- time series ----------------------------------------------------------------


@dataclass(frozen=True)
class FieldSeries:
    """Lattice values at increasing times; ``values`` has shape ``(k, grid.size)``."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float).reshape(len(t), -1)
        if v.shape[1] != self.grid.size:
            raise ValueError(f"series has {v.shape[1]} values per snapshot, grid has {self.grid.size}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.times)

    def field(self, k: int) -> Field:
        return Field(self.grid, self.values[k], float(self.times[k]))

    def shifted(self, dt: float) -> "FieldSeries":
        return FieldSeries(self.grid, self.times + dt, self.values)

    @classmethod
    def steady(cls, fld: Field, times: Sequence[float]) -> "FieldSeries":
        t = np.asarray(times, dtype=float)
        return cls(fld.grid, t, np.tile(fld.flat, (len(t), 1)))

    @classmethod
    def of(cls, obj) -> "FieldSeries":
        """Accept a :class:`FieldSeries` or anything with ``grid``, ``times``, ``values``."""
        if isinstance(obj, cls):
            return obj
        return cls(obj.grid, obj.times, obj.values)


def _coef(c: Coefficient, times: np.ndarray, size: int) -> np.ndarray:
    """Coefficient values as a ``(len(times), size)`` array."""
    if callable(c):
        return np.stack([np.broadcast_to(np.asarray(c(t), float).ravel(), (size,)) for t in times])
    a = np.asarray(c, dtype=float)
    if a.ndim <= 1:
        return np.broadcast_to(a.ravel() if a.ndim else a, (size,))[None, :].repeat(len(times), 0)
    return a.reshape(len(times), size)


def _time_derivative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Centred differences inside, one-sided at the first and last snapshot."""
    if len(times) < 2:
        raise ValueError("need at least two snapshots for a time derivative")
    return np.gradient(values, times, axis=0, edge_order=1)


# --- specification --------------------------------------------------------------


@dataclass(frozen=True)
class BarrierSpec:
    """Parameters of the moving-plane barrier near the critical plane.

    ``d`` is the width of the strip next to the plane on which the step term
    dominates; the compact part is ``D0 = D ∩ {x_axis >= lam + d} ∩ B_rho1``.
    ``gamma_n`` is filled in by :func:`psi_sub_build` when left unset.
    """

    mu: float
    tau: float
    theta: float
    sigma: float
    t_n: float
    T_n: float
    delta0: float
    rho1: float
    rho2: float
    q: float
    m: float
    eps_n: float
    a0: float
    c0: float
    d: float
    lam: float = 0.0
    axis: int = 0
    gamma_n: float | None = None

    def problems(self) -> list[str]:
        """Violated invariants, as readable strings (empty when valid)."""
        out = []
        if not 0 < self.theta < self.sigma:
            out.append(f"need 0 < theta < sigma (theta={self.theta:g}, sigma={self.sigma:g})")
        if not self.rho2 > self.rho1:
            out.append(f"need rho2 > rho1 (rho1={self.rho1:g}, rho2={self.rho2:g})")
        if not self.tau > 0:
            out.append("need tau > 0")
        if not self.q > 0:
            out.append("need q > 0")
        if self.c0 - self.tau < self.a0 - 1e-14:
            out.append(f"need c0 - tau >= a0 (c0={self.c0:g}, tau={self.tau:g}, a0={self.a0:g})")
        if not self.T_n > self.t_n:
            out.append("need T_n > t_n")
        return out

    def check_structure(self, grid: Grid) -> None:
        if self.tau < 0 or self.theta < 0 or self.q <= 0:
            raise BarrierSpecError("tau and theta must be nonnegative, q positive")
        if self.mu < self.lam:
            raise BarrierSpecError(f"need mu >= lam, got mu={self.mu}, lam={self.lam}")
        if not 0 <= self.axis < grid.dim:
            raise BarrierSpecError(f"axis {self.axis} out of range")
        grid.plane_index(self.mu)
        grid.plane_index(self.lam)

    def coord(self, grid: Grid) -> np.ndarray:
        return grid.mesh()[self.axis].ravel()

    def radius_of(self, grid: Grid) -> np.ndarray:
        return np.sqrt(grid.norm2().ravel())

    def sigma_tilde(self, grid: Grid) -> np.ndarray:
        return self.coord(grid) > self.lam

    def D(self, grid: Grid) -> np.ndarray:
        return (self.coord(grid) > self.mu + self.delta0) & (self.radius_of(grid) < self.rho2)

    def D0(self, grid: Grid) -> np.ndarray:
        x = self.coord(grid)
        return self.D(grid) & (x >= self.lam + self.d) & (self.radius_of(grid) < self.rho1)

    def window(self, times: np.ndarray) -> np.ndarray:
        eps = 1e-9 * max(1.0, abs(self.T_n))
        return (times >= self.t_n - eps) & (times <= self.T_n + eps)

    def step(self, grid: Grid) -> np.ndarray:
        """``h(x) = 1`` for ``x_axis >= lam``, ``-1`` otherwise."""
        return np.where(self.coord(grid) >= self.lam, 1.0, -1.0)


# --- zeta and the differential inequality -----------------------------------------


def zeta_build(w_mu_traj, spec: BarrierSpec) -> FieldSeries:
    """``zeta = e^{-theta (t - t_n)} (w~_mu - tau h)`` at every snapshot."""
    ser = FieldSeries.of(w_mu_traj)
    grid = ser.grid
    spec.check_structure(grid)
    hstep = spec.step(grid)
    out = np.empty_like(ser.values)
    for k, t in enumerate(ser.times):
        wt = w_tilde_modify(Field(grid, ser.values[k], float(t)), spec.mu, spec.axis, spec.lam).flat
        out[k] = math.exp(-spec.theta * (t - spec.t_n)) * (wt - spec.tau * hstep)
    return FieldSeries(grid, ser.times, out)


@dataclass
class ResidualReport:
    status: str
    max_residual: float
    tol: float
    scale: float
    hypothesis: str
    argmax: tuple[float, ...] = ()
    stats: dict = field(default_factory=dict)


def _hyp_c_far(c: np.ndarray, grid: Grid, spec: BarrierSpec) -> str | None:
    far = spec.sigma_tilde(grid) & (spec.radius_of(grid) >= spec.rho1)
    if far.any() and np.max(c[:, far]) >= -spec.sigma:
        return f"c_lambda not below -sigma outside B_rho1 (max {np.max(c[:, far]):.4g})"
    return None


def residual_L_lambda(zeta: FieldSeries, c_lambda: Coefficient, kernel: KernelMatrix,
                      spec: BarrierSpec, rel_tol: float = 1e-3) -> ResidualReport:
    """Max of ``d_t zeta + (-Delta)^s zeta - c_lambda zeta`` over ``D x [t_n, T_n]``.

    PASS iff the max is ``<= rel_tol * max|zeta|``. A violated parameter invariant
    (for example ``theta >= sigma``) gives NOT-APPLICABLE with the residual still reported.
    """
    zeta = FieldSeries.of(zeta)
    grid = zeta.grid
    D = spec.D(grid)
    win = spec.window(zeta.times)
    if not D.any() or not win.any():
        raise ValueError("residual region D x [t_n, T_n] is empty")
    c = _coef(c_lambda, zeta.times, grid.size)
    res = _time_derivative(zeta.values, zeta.times) + kernel.apply_many(zeta.values) - c * zeta.values
    sub = res[win][:, D]
    scale = float(np.max(np.abs(zeta.values[win])))
    tol = rel_tol * scale
    mx = float(sub.max())
    k, i = np.unravel_index(int(np.argmax(sub)), sub.shape)
    node = grid.points[np.flatnonzero(D)[i]]
    problems = spec.problems()
    far_msg = _hyp_c_far(c[win], grid, spec)
    if far_msg:
        problems.append(far_msg)
    hyp = "; ".join(problems) if problems else "met"
    status = NA if problems else (PASS if mx <= tol else FAIL)
    far = D & (spec.radius_of(grid) >= spec.rho1)
    stats = {"max_outside_rho1": float(res[win][:, far].max()) if far.any() else -math.inf,
             "t_argmax": float(zeta.times[win][k])}
    return ResidualReport(status, mx, tol, scale, hyp, tuple(float(v) for v in node), stats)


# --- Psi: initial and exterior conditions -----------------------------------------


@dataclass
class PsiReport:
    psi: FieldSeries
    gamma_n: float
    M: float
    initial_status: str
    exterior_status: str
    estimate_ii_status: str
    stats: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        parts = (self.initial_status, self.exterior_status, self.estimate_ii_status)
        if FAIL in parts:
            return FAIL
        return NA if NA in parts else PASS


def psi_sub_build(zeta: FieldSeries, spec: BarrierSpec, w_lambda=None, tol: float = 1e-10) -> PsiReport:
    """``Psi = q zeta / ||zeta(t_n)||_{L^inf(D)}`` with the checks that make it a lower barrier.

    With ``w_lambda`` given (same snapshot times) this verifies

    * initial: ``w_lam(t_n) >= Psi(t_n)`` on ``D`` (requires ``w_lam(t_n) > q`` there);
    * exterior: ``w_lam >= Psi`` on ``Sigma~ \\ D``, together with the two ingredients
      of the split argument, ``Psi <= -e^{-theta(t-t_n)} (q/gamma_n)(tau/2)`` there and
      ``eps_n <= (q/M)(tau/2)``;
    * estimate (ii): ``w_lam >= e^{-theta(t-t_n)} q a0 / M`` on ``D0``.
    """
    zeta = FieldSeries.of(zeta)
    grid = zeta.grid
    D = spec.D(grid)
    k0 = int(np.argmin(np.abs(zeta.times - spec.t_n)))
    if abs(zeta.times[k0] - spec.t_n) > 1e-9 * max(1.0, abs(spec.t_n)):
        raise ValueError("zeta has no snapshot at t_n")
    gamma = float(np.max(np.abs(zeta.values[k0][D]))) if D.any() else 0.0
    if not gamma > 0:
        raise ZeroDivisionError("||zeta(t_n)|| over D vanishes")
    M = gamma if spec.gamma_n is None else max(gamma, spec.gamma_n)
    psi = FieldSeries(grid, zeta.times, spec.q * zeta.values / gamma)
    stats = {"gamma_n": gamma, "M": M}
    if w_lambda is None:
        return PsiReport(psi, gamma, M, NA, NA, NA, stats)
    w = FieldSeries.of(w_lambda)
    if w.grid != grid or len(w) != len(zeta) or not np.allclose(w.times, zeta.times):
        raise ValueError("w_lambda and zeta must share grid and snapshot times")
    win = spec.window(zeta.times)
    decay = np.exp(-spec.theta * (zeta.times - spec.t_n))[:, None]

    # initial condition
    w0 = w.values[k0][D]
    stats["min_w_tn_on_D"] = float(w0.min())
    if w0.min() <= spec.q:
        initial = NA
    else:
        initial = PASS if np.all(w0 >= psi.values[k0][D] - tol) else FAIL

    # exterior condition
    ext = spec.sigma_tilde(grid) & ~D
    gap = (w.values - psi.values)[win][:, ext]
    psi_bound = (-(spec.q / gamma) * (spec.tau / 2) * decay)[win]
    psi_ok = bool(np.all(psi.values[win][:, ext] <= psi_bound + tol)) if ext.any() else True
    eps_ok = spec.eps_n <= (spec.q / M) * (spec.tau / 2)
    inf0 = float(w.values[k0][spec.sigma_tilde(grid)].min())
    stats.update(min_gap_exterior=float(gap.min()) if gap.size else math.inf,
                 psi_split_bound_holds=psi_ok, eps_n_small=eps_ok, inf_w_tn=inf0)
    if not (psi_ok and eps_ok) or inf0 < -spec.eps_n - tol:
        exterior = NA
    else:
        exterior = PASS if (not gap.size or gap.min() >= -tol) else FAIL

    # estimate (ii) on the compact part
    D0 = spec.D0(grid)
    C0 = spec.q * spec.a0 / M
    stats["C0"] = C0
    if not D0.any():
        est = NA
    else:
        lhs = w.values[win][:, D0] - (C0 * decay[win])
        stats["min_margin_D0"] = float(lhs.min())
        est = PASS if lhs.min() >= -tol else FAIL
    return PsiReport(psi, gamma, M, initial, exterior, est, stats)


# --- estimate (i) -----------------------------------------------------------------


@dataclass
class LowerBoundReport:
    status: str
    min_margin: float
    inf_at_tn: float
    stats: dict = field(default_factory=dict)


def global_lower_bound_check(w_traj, spec: BarrierSpec, tol: float = 1e-10) -> LowerBoundReport:
    """``w_lam(x,t) >= e^{-theta(t-t_n)} min{0, inf w_lam(., t_n)}`` on ``Sigma~ x [t_n, T_n]``."""
    w = FieldSeries.of(w_traj)
    grid = w.grid
    sig = spec.sigma_tilde(grid)
    win = spec.window(w.times)
    k0 = int(np.argmin(np.abs(w.times - spec.t_n)))
    inf0 = float(w.values[k0][sig].min())
    bound = np.exp(-spec.theta * (w.times[win] - spec.t_n)) * min(0.0, inf0)
    margin = w.values[win][:, sig] - bound[:, None]
    D = spec.D(grid)
    pos_D = bool(np.all(w.values[win][:, D] > 0)) if D.any() else True
    stats = {"w_positive_on_D": pos_D}
    return LowerBoundReport(PASS if margin.min() >= -tol else FAIL, float(margin.min()), inf0, stats)


# --- cutoffs ------------------------------------------------------------------------


def _smooth_step(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``S(u)`` rising from 0 at ``u <= 0`` to 1 at ``u >= 1`` and its derivative."""
    u = np.asarray(u, dtype=float)

    def f(v):
        vs = np.where(v > 0, v, 1.0)
        return np.where(v > 0, np.exp(-1.0 / vs), 0.0)

    def fp(v):
        vs = np.where(v > 0, v, 1.0)
        return np.where(v > 0, np.exp(-1.0 / vs) / (vs * vs), 0.0)

    a, b = f(u), f(1.0 - u)
    den = a + b
    S = a / den
    dS = (fp(u) * b + a * fp(1.0 - u)) / (den * den)
    return S, dS


@dataclass(frozen=True)
class CutoffPair:
    """Smooth spatial and temporal cutoffs built from ``exp(-1/u)``.

    ``zeta_x`` is 1 on ``B_{delta/2}(xbar)`` and 0 outside ``B_delta(xbar)``;
    ``eta_t`` is 1 on ``[t_c - eps_o/2, t_c + eps_o/2]`` and 0 outside ``[t_c - eps_o, t_c + eps_o]``.
    """

    delta: float
    xbar: tuple[float, ...]
    eps_o: float
    t_c: float = 1.0

    def __post_init__(self) -> None:
        if not (self.delta > 0 and 0 < self.eps_o < self.t_c + 1e300):
            raise ValueError("delta and eps_o must be positive")

    def _plateau(self, r: np.ndarray, half: float) -> tuple[np.ndarray, np.ndarray]:
        S, dS = _smooth_step((np.abs(r) - half) / half)
        return 1.0 - S, -dS / half

    def zeta_x(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        r = np.sqrt(sum((np.asarray(a, float) - c) ** 2 for a, c in zip(coords, self.xbar)))
        return self._plateau(r, self.delta / 2)[0]

    def eta_t(self, t: float | np.ndarray) -> np.ndarray:
        return self._plateau(np.asarray(t, float) - self.t_c, self.eps_o / 2)[0]

    def eta_dt(self, t: float | np.ndarray) -> np.ndarray:
        dt = np.asarray(t, float) - self.t_c
        return self._plateau(dt, self.eps_o / 2)[1] * np.sign(dt)


def _ball_nodes(grid: Grid, xbar: Sequence[float], delta: float) -> np.ndarray:
    return grid.norm2(xbar).ravel() < delta * delta


def _nearest_node(grid: Grid, xbar: Sequence[float]) -> int:
    return int(np.argmin(grid.norm2(xbar).ravel()))


# --- strong maximum principle subsolution ---------------------------------------------


@dataclass
class StrongMaxSubReport:
    status: str
    eps: float
    eps_admissible: float
    max_residual: float
    supersolution_min: float
    comparison_min: float
    lower_bound: float
    hypothesis: str
    stats: dict = field(default_factory=dict)


def strongmax_sub_build(ubar, D: np.ndarray, xbar: Sequence[float], delta: float, eps: float | None,
                        cut: CutoffPair, kernel: KernelMatrix, m: float = 0.0,
                        iterations: int = 20, tol: float = 1e-10) -> StrongMaxSubReport:
    """Subsolution ``chi_D ubar + eps zeta(x) eta(t)`` on ``B_delta(xbar) x [t_c - eps_o, t_c + eps_o]``.

    The admissible amplitude is the largest ``eps`` in ``(0, 1]`` (bisection,
    ``iterations`` steps from 1) with ``d_t u_ + (-Delta)^s u_ <= 0`` on the cylinder.
    ``eps=None`` uses that value. The lower bound reported is ``e^{-m} eps zeta(xbar)``.
    """
    u = FieldSeries.of(ubar)
    grid = u.grid
    D = np.asarray(D, bool).ravel()
    B = _ball_nodes(grid, xbar, delta)
    if not B.any():
        raise ValueError("B_delta(xbar) contains no lattice node")
    if np.any(B & D):
        raise ValueError("B_delta(xbar) intersects D")
    if not D.any():
        raise ValueError("D is empty")
    win = (u.times >= cut.t_c - cut.eps_o - 1e-12) & (u.times <= cut.t_c + cut.eps_o + 1e-12)
    if win.sum() < 2:
        raise ValueError("ubar does not cover the time window")
    uD = u.values[win][:, D]
    c0 = 2.0 * float(uD.min())
    if not c0 > 0:
        raise ValueError("ubar is not positive on D over the window")
    times = u.times[win]
    zx = cut.zeta_x(grid.mesh()).ravel()
    eta, deta = cut.eta_t(times), cut.eta_dt(times)
    chi_u = np.where(D[None, :], u.values[win], 0.0)
    base = kernel.apply_many(chi_u)[:, B]  # d_t(chi_D u) vanishes off D
    Lz = kernel.apply(zx)[B]
    unit = deta[:, None] * zx[B][None, :] + eta[:, None] * Lz[None, :]

    def max_res(e: float) -> float:
        return float(np.max(base + e * unit))

    if max_res(1.0) <= 0:
        eps_adm = 1.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if max_res(mid) <= 0 else (lo, mid)
        eps_adm = lo
    eps = eps_adm if eps is None else float(eps)
    res = max_res(eps)
    # ubar must be a supersolution of the c = 0 equation on the cylinder
    sup = _time_derivative(u.values, u.times)[win][:, B] + kernel.apply_many(u.values[win])[:, B]
    sup_min = float(sup.min())
    under = eps * eta[:, None] * zx[B][None, :]
    comp = float(np.min(u.values[win][:, B] - under))
    k_c = int(np.argmin(np.abs(times - cut.t_c)))
    i_bar = _nearest_node(grid, xbar)
    bound = math.exp(-m) * eps * float(zx[i_bar]) * float(eta[k_c])
    value = float(u.values[win][k_c, i_bar])
    stats = {"c0": c0, "coupling_min": float(-base.max()), "ubar_at_xbar": value, "m": m}
    if sup_min < -tol:
        return StrongMaxSubReport(NA, eps, eps_adm, res, sup_min, comp, bound,
                                  "ubar is not a supersolution on the cylinder", stats)
    ok = res <= 0 and comp >= -tol and value * math.exp(-m) >= bound - tol and (eps == 0 or bound > 0)
    return StrongMaxSubReport(PASS if ok else FAIL, eps, eps_adm, res, sup_min, comp, bound, "met", stats)


# --- final boundary subsolution -----------------------------------------------------------


@dataclass
class BoundarySubReport:
    status: str
    hypothesis: str
    max_residual: float
    exterior_min: float
    comparison_min: float
    conclusion_value: float
    conclusion_bound: float
    C1: float
    C2: float
    stats: dict = field(default_factory=dict)


def boundary_sub_check(w_traj, D0: np.ndarray, xbar: Sequence[float], delta: float, spec: BarrierSpec,
                       kernel: KernelMatrix, *, c_lambda: Coefficient, tol: float = 1e-10) -> BoundarySubReport:
    """``w_ = chi_D0 w~ + (2 phi_delta - 1) eps_n e^{-(m+theta)(t-t_n)}`` with ``w~ = e^{-m(t-t_n)} w_lam``.

    Checks, on ``B_delta(xbar) x [t_n, T_n]``: the initial condition, the exterior
    condition on ``Sigma~ \\ B_delta``, the differential inequality
    ``d_t w_ + (-Delta)^s w_ - (c_lambda - m) w_ <= 0``, the comparison ``w_ <= w~``
    and the conclusion ``w_lam(xbar, T_n) >= eps_n e^{-theta(T_n - t_n)}``.
    """
    w = FieldSeries.of(w_traj)
    grid = w.grid
    D0 = np.asarray(D0, bool).ravel()
    sig = spec.sigma_tilde(grid)
    B = _ball_nodes(grid, xbar, delta)
    nan = math.nan
    if not B.any():
        raise ValueError("B_delta(xbar) contains no lattice node")
    if np.any(B & ~sig):
        raise ValueError("B_delta(xbar) leaves the half-space")
    if np.any(B & D0):
        raise ValueError("B_delta(xbar) intersects D0")

    def na(msg: str, **st) -> BoundarySubReport:
        return BoundarySubReport(NA, msg, nan, nan, nan, nan, nan, nan, nan, st)

    if not D0.any():
        return na("D0 is empty: no coupling term")
    win = spec.window(w.times)
    times = w.times[win]
    W = w.values[win]
    k0 = int(np.argmin(np.abs(times - spec.t_n)))
    c = _coef(c_lambda, w.times, grid.size)[win]
    if np.max(c[:, sig]) >= spec.m:
        return na(f"m={spec.m:g} does not exceed sup c_lambda={np.max(c[:, sig]):.4g}")
    decay_t = np.exp(-spec.theta * (times - spec.t_n))
    C0 = float(np.min(W[:, D0] / decay_t[:, None]))
    if not C0 > 0:
        return na("no positive lower bound e^{-theta(t-t_n)} C0 on D0", C0=C0)
    if not (spec.eps_n < spec.q / 2 and np.all(W[k0, B] > spec.q / 2)):
        return na("initial condition: need eps_n < q/2 and w_lam(t_n) > q/2 on B_delta(xbar)")
    em = np.exp(-spec.m * (times - spec.t_n))
    wt = W * em[:, None]
    e = spec.eps_n * np.exp(-(spec.m + spec.theta) * (times - spec.t_n))
    phi = bump(grid.mesh(), kernel.order.s, delta, xbar).ravel() / delta ** (2 * kernel.order.s)
    chi = np.where(D0[None, :], wt, 0.0)
    under = chi + (2 * phi - 1)[None, :] * e[:, None]

    ext = sig & ~B
    exterior_min = float(np.min((wt - under)[:, ext])) if ext.any() else math.inf
    # L applied with the constant -e(t) continued beyond the lattice; chi part is zero there
    L_phi = kernel.apply(phi)
    L_chi = kernel.apply_many(chi)
    d_under = -(spec.m + spec.theta) * (2 * phi - 1)[None, :] * e[:, None]  # chi part is static on B
    Ct = c - spec.m
    res = d_under + L_chi + 2 * L_phi[None, :] * e[:, None] - Ct * under
    rB = res[:, B]
    comp = float(np.min((wt - under)[:, B]))
    C1 = float(np.max(-(spec.m + spec.theta) * (2 * phi[B] - 1)[None, :] + 2 * L_phi[B][None, :]
                      - Ct[:, B] * (2 * phi[B] - 1)[None, :]))
    C2 = float(np.min(-L_chi[:, B] / (e[:, None] / spec.eps_n)))
    i_bar = _nearest_node(grid, xbar)
    kT = int(np.argmax(times))
    bound = float((2 * phi[i_bar] - 1) * spec.eps_n * math.exp(-spec.theta * (times[kT] - spec.t_n)))
    value = float(W[kT, i_bar])
    ok = (rB.max() <= 0 and exterior_min >= -tol and comp >= -tol and bound > 0 and value >= bound - tol)
    stats = {"C0": C0, "a_delta": float(np.mean(L_phi[B])), "xbar_node": grid.points[i_bar].tolist()}
    return BoundarySubReport(PASS if ok else FAIL, "met", float(rB.max()), exterior_min, comp,
                             value, bound, C1, C2, stats)


# --- manufactured configuration ----------------------------------------------------------


@dataclass
class ManufacturedBarrier:
    """A complete barrier configuration with measured constants."""

    grid: Grid
    kernel: KernelMatrix
    spec: BarrierSpec
    w_mu: FieldSeries
    c_lambda: np.ndarray
    w_lambda: FieldSeries
    xbar: tuple[float, ...]
    delta: float
    log: dict


def steady_antisym_solution(kernel: KernelMatrix, plane: PlaneReflection, forcing: np.ndarray,
                            kappa: float) -> np.ndarray:
    """Solve ``((-Delta)^s + kappa) w = forcing`` for ``w`` antisymmetric about ``plane``.

    Unknowns live on ``x_axis > lam``; the mirror half is ``-w``. Nodes whose
    partner leaves the lattice read the zero exterior.
    """
    grid = kernel.grid
    x = grid.mesh()[plane.axis].ravel()
    right = x > plane.lam
    Lr = _antisym_operator(kernel, plane, right)
    Lr[np.diag_indices_from(Lr)] += kappa
    w = np.zeros(grid.size)
    w[right] = np.linalg.solve(Lr, np.asarray(forcing, float).ravel()[right])
    img = reflection_map(grid, plane)
    src = np.flatnonzero(right & (img >= 0))
    w[img[src]] = -w[src]
    return w


def manufactured_barrier(kernel: KernelMatrix, *, mu_cells: int = 2, kappa: float = 3.0,
                         sigma: float = 1.0, theta: float = 0.5, q: float = 0.5, d: float = 1.0,
                         source_offset: float = 1.5,
                         t_n: float = 0.0, T_n: float = 1.0, snap_every: float = 0.02,
                         axis: int = 0) -> ManufacturedBarrier:
    """Build a barrier configuration around the plane ``lam = 0``.

    ``w_mu`` is the steady antisymmetric solution of ``((-Delta)^s + kappa) w = g``
    about ``T_mu`` with ``g`` an odd pair of bumps centred ``source_offset`` from ``T_mu``, so ``c_mu = g / w - kappa`` is
    exactly ``-kappa`` away from the bumps. The run uses ``c_lambda = c_mu`` on
    ``x_axis > mu`` and ``-kappa`` elsewhere. All constants (``rho1``, ``c0``,
    ``tau``, ``delta0``, ``rho2``, ``gamma_n``, ``eps_n``) are measured from the
    data so that the differential inequality and the exterior condition hold.
    ``w_lam`` solves the linear antisymmetric problem about ``T_0`` from data that is
    ``2q`` on ``D`` and has a small negative dip of depth ``eps_n`` far out.
    """
    grid = kernel.grid
    h = grid.h
    s = kernel.order.s
    mu = mu_cells * h
    plane_mu = PlaneReflection(axis, mu)
    mesh = grid.mesh()
    x = mesh[axis].ravel()
    r = np.sqrt(grid.norm2().ravel())
    c_src = [0.0] * grid.dim
    c_src[axis] = mu + source_offset
    c_img = list(c_src)
    c_img[axis] = mu - source_offset
    g = (np.maximum(1 - grid.norm2(c_src).ravel(), 0) ** 2 - np.maximum(1 - grid.norm2(c_img).ravel(), 0) ** 2)
    w_mu = steady_antisym_solution(kernel, plane_mu, g, kappa)
    right_mu = x > mu
    c = np.full(grid.size, -kappa)
    c[right_mu] = kernel.apply(w_mu)[right_mu] / w_mu[right_mu]
    sig = x > 0
    log = {"mu": mu, "kappa": kappa, "c_max": float(c[sig].max())}

    bad = sig & (c >= -sigma)
    rho1 = float(r[bad].max() + h / 2) if bad.any() else h
    K = sig & (x >= d) & (r < rho1)
    c0 = float(w_mu[K].min())
    # tau small enough that -theta/2 w_mu + tau (theta + c) <= 0 on the compact part
    hot = K & (theta + c > 0)
    tau = c0 / 2
    if hot.any():
        tau = min(tau, float(np.min(theta * w_mu[hot] / (2 * (theta + c[hot])))))
    a0 = c0 - tau
    # delta0 is node-aligned so that the face x = mu + delta0 carries nodes
    cols = np.unique(x[(x > mu) & (x < d)])
    small = np.array([bool(np.all(w_mu[x == v] <= tau / 2)) for v in cols], dtype=bool)
    run = int(np.argmin(small)) if not small.all() else small.size
    if run == 0:
        raise BarrierSpecError("w_mu exceeds tau/2 right next to T_mu; refine h")
    delta0 = float(cols[run - 1] - mu)
    face = mu + delta0
    wt = w_tilde_modify(Field(grid, w_mu), mu, axis).flat
    big = sig & (wt > tau / 2)
    rho2 = max(rho1 + h, float(r[big].max() + h / 2) if big.any() else 0.0)
    log.update(rho1=rho1, c0=c0, tau=tau, a0=a0, delta0=delta0, rho2=rho2)

    times = t_n + snap_every * np.arange(int(round((T_n - t_n) / snap_every)) + 1)
    w_mu_ser = FieldSeries.steady(Field(grid, w_mu), times)
    spec = BarrierSpec(mu=mu, tau=tau, theta=theta, sigma=sigma, t_n=t_n, T_n=float(times[-1]),
                       delta0=delta0, rho1=rho1, rho2=rho2, q=q, m=0.0, eps_n=0.0, a0=a0, c0=c0,
                       d=d, axis=axis)
    zeta0 = zeta_build(FieldSeries(grid, times[:1], w_mu[None, :]), spec)
    D = spec.D(grid)
    gamma = float(np.max(np.abs(zeta0.values[0][D])))
    eps_n = 0.5 * min((q / gamma) * (tau / 2), q / 2)
    m = float(c[sig].max()) + 1.0
    spec = replace(spec, eps_n=eps_n, m=m, gamma_n=gamma)
    log.update(gamma_n=gamma, M=gamma, eps_n=eps_n, m=m)

    # initial reflected difference about T_0
    ramp = np.minimum(1.0, x / (face / 2))
    fade = np.exp(-((np.maximum(r - rho2, 0.0)) / 0.5) ** 2)
    dip_c = [0.0] * grid.dim
    dip_c[axis] = rho2 + 1.0
    if rho2 + 1.5 >= grid.radius:
        raise BarrierSpecError(f"lattice radius {grid.radius} too small for rho2={rho2:.3g}")
    dip = np.maximum(1 - grid.norm2(dip_c).ravel() / 0.25, 0) ** 2
    w0 = np.where(sig, 2 * q * ramp * fade - eps_n * dip, 0.0)
    plane0 = PlaneReflection(axis, 0.0)
    img = reflection_map(grid, plane0)
    src = np.flatnonzero(sig & (img >= 0))
    w0[img[src]] = -w0[src]
    setup = LinearSetup(grid, s, sig, w0, c, (float(c.min()), float(c.max())), plane=plane0,
                        side="plus", T=T_n - t_n, snap_every=snap_every)
    t_rel, snaps = evolve_linear(setup, kernel)
    w_lam = FieldSeries(grid, t_rel + t_n, snaps)

    xbar = tuple(float(v) for v in grid.points[_nearest_node(grid, tuple(
        face if k == axis else 0.0 for k in range(grid.dim)))])
    delta = 0.5 * min(d - face, face)
    log.update(xbar=list(xbar), delta=delta)
    return ManufacturedBarrier(grid, kernel, spec, w_mu_ser, c, w_lam, xbar, delta, log)
