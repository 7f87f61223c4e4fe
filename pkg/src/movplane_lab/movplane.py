"""Moving-plane diagnostics: reflected differences, critical positions, symmetry verdicts,
and numerical checks of the asymptotic maximum principles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fraclap import ExteriorSpec, Field, KernelMatrix, build_kernel
from .grid import Grid, GridError, PlaneReflection, radial_average, reflection_map, side_mask

PASS, FAIL, NA = "PASS", "FAIL", "NOT-APPLICABLE"


class NoStartingPosition(RuntimeError):
    """The sign condition already fails at the outermost admissible plane."""


# --- reflected differences ------------------------------------------------------


@dataclass(frozen=True)
class AntisymField:
    """``w(x) = u(x^lam) - u(x)`` on the whole lattice.

    ``sigma`` marks ``Sigma_lam = {x_axis < lam}``; values there determine the rest.
    """

    grid: Grid
    plane: PlaneReflection
    values: np.ndarray
    t: float = 0.0

    @property
    def sigma(self) -> np.ndarray:
        return side_mask(self.grid, self.plane, "minus").ravel()

    @property
    def sigma_values(self) -> np.ndarray:
        return self.values.ravel()[self.sigma]

    def antisymmetry_defect(self) -> float:
        """``max |w(x) + w(x^lam)|`` over node pairs inside the lattice."""
        img = reflection_map(self.grid, self.plane)
        v = self.values.ravel()
        ok = img >= 0
        if not ok.any():
            return 0.0
        return float(np.max(np.abs(v[ok] + v[img[ok]])))


def _reflected(values: np.ndarray, grid: Grid, plane: PlaneReflection) -> np.ndarray:
    img = reflection_map(grid, plane)
    v = np.asarray(values, dtype=float).ravel()
    return np.where(img >= 0, v[np.maximum(img, 0)], 0.0)


def w_lambda(u: Field, plane: PlaneReflection) -> AntisymField:
    """Exact nodewise ``u(x^lam) - u(x)``; images beyond the lattice read the zero exterior."""
    u.grid.plane_index(plane.lam)
    v = u.flat
    w = _reflected(v, u.grid, plane) - v
    return AntisymField(u.grid, plane, w.reshape(u.grid.shape), u.t)


def psi_min_profile(phi: Field, direction: int, lambdas: Sequence[float]) -> list[tuple[float, float]]:
    """``(lam, min over Sigma_lam of psi_lam)`` for every plane offset in ``lambdas``."""
    if len(lambdas) == 0:
        raise ValueError("empty list of plane offsets")
    out = []
    for lam in lambdas:
        plane = PlaneReflection(direction, float(lam))
        psi = w_lambda(phi, plane)
        sv = psi.sigma_values
        out.append((float(lam), float(sv.min()) if sv.size else 0.0))
    return out


def _plane_offsets(grid: Grid) -> np.ndarray:
    """All interior plane offsets ``m*h`` with at least one node on each side."""
    half = grid.n // 2
    return np.arange(-half + 1, half) * grid.h


@dataclass
class Lambda0Result:
    direction: int
    side: str
    lambda0: float
    sweep: list[tuple[float, float]]
    tol: float


def find_lambda0(phi_set: Sequence[Field], direction: int, side: str = "minus",
                 tol: float = 0.0) -> Lambda0Result:
    """Critical plane position at grid resolution, over every element of ``phi_set``.

    ``minus``: largest ``lam`` with ``min psi_mu >= -tol`` for all grid ``mu <= lam``.
    ``plus``: smallest ``lam`` with ``max psi_mu <= tol`` for all grid ``mu >= lam``.
    ``sweep`` holds the per-plane minimum (minus side) or maximum (plus side)
    over the set.
    """
    if len(phi_set) == 0:
        raise ValueError("empty phi set")
    grid = phi_set[0].grid
    lams = _plane_offsets(grid)
    mins = np.full(len(lams), np.inf)
    maxs = np.full(len(lams), -np.inf)
    for phi in phi_set:
        for k, lam in enumerate(lams):
            sv = w_lambda(phi, PlaneReflection(direction, float(lam))).sigma_values
            mins[k] = min(mins[k], sv.min())
            maxs[k] = max(maxs[k], sv.max())
    if side == "minus":
        ok = mins >= -tol
        if not ok[0]:
            raise NoStartingPosition(f"psi < -tol already at lam={lams[0]:g}")
        k = int(np.argmin(ok)) - 1 if not ok.all() else len(lams) - 1
        sweep = list(zip(lams.tolist(), mins.tolist()))
    elif side == "plus":
        ok = maxs <= tol
        if not ok[-1]:
            raise NoStartingPosition(f"psi > tol already at lam={lams[-1]:g}")
        bad = np.flatnonzero(~ok)
        k = int(bad[-1]) + 1 if bad.size else 0
        sweep = list(zip(lams.tolist(), maxs.tolist()))
    else:
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    return Lambda0Result(direction, side, float(lams[k]), sweep, tol)


def asymmetry_center(phi: Field, direction: int) -> float:
    """Brute force: the half-grid point ``c`` minimising ``max |phi(x) - phi(2c - x)|``."""
    grid = phi.grid
    v = phi.values
    best, best_c = np.inf, 0.0
    for m in range(-grid.n + 1, grid.n):
        c = 0.5 * m * grid.h
        # index map i -> m + n - 1 - i  reflects about c = m*h/2
        i = np.arange(grid.n)
        j = m + grid.n - 1 - i
        ok = (j >= 0) & (j < grid.n)
        if ok.sum() < grid.n // 2:
            continue
        a = np.take(v, i[ok], axis=direction)
        b = np.take(v, j[ok], axis=direction)
        err = float(np.max(np.abs(a - b)))
        if err < best:
            best, best_c = err, c
    return best_c


# --- symmetry verdict -----------------------------------------------------------


@dataclass(frozen=True)
class SymmetryTols:
    tol_omega: float = 1e-6
    tol_sym: float = 0.02
    tol_mono: float = 0.01
    center_tol_cells: float = 2.0


@dataclass
class SymmetryReport:
    center: tuple[float, ...]
    radial_deviation: float
    monotonicity_violation: float
    verdict: str  # Symmetric | Asymmetric | Zero
    lambda0_minus: tuple[float, ...] = ()
    lambda0_plus: tuple[float, ...] = ()
    strictly_decreasing: bool = False
    note: str = ""


def symmetry_report(phi: Field, tols: SymmetryTols = SymmetryTols()) -> SymmetryReport:
    """Radial symmetry and monotonicity about the moving-plane centre.

    Thresholds are applied to ``phi / sup|phi|``. The deviation uses exact-radius
    shells; monotonicity uses width-``h`` bins so that shells of almost equal radius
    are not compared against each other.
    """
    grid = phi.grid
    sup = float(np.max(np.abs(phi.values)))
    if not np.all(np.isfinite(phi.values)):
        raise ValueError("phi must be finite")
    if sup <= tols.tol_omega:
        return SymmetryReport((0.0,) * grid.dim, 0.0, 0.0, "Zero", note="sup|phi| <= tol_omega")
    nphi = Field(grid, phi.values / sup, phi.t, phi.ext)
    lm, lp, center = [], [], []
    note = ""
    for ax in range(grid.dim):
        try:
            a = find_lambda0([nphi], ax, "minus", tols.tol_mono).lambda0
            b = find_lambda0([nphi], ax, "plus", tols.tol_mono).lambda0
        except NoStartingPosition as exc:
            return SymmetryReport((0.0,) * grid.dim, math.inf, math.inf, "Asymmetric",
                                  note=f"axis {ax}: {exc}")
        lm.append(a)
        lp.append(b)
        center.append(0.5 * (a + b))
        if abs(b - a) > tols.center_tol_cells * grid.h + 1e-12:
            note += f"axis {ax}: lambda0- = {a:g} != lambda0+ = {b:g}; "
    # centre must sit on the half grid for exact shells
    center = [round(2 * c / grid.h) * grid.h / 2 for c in center]
    shells = radial_average(nphi.values, grid, center)
    dev = max(p[2] for p in shells)
    bins = radial_average(nphi.values, grid, center, bin_width=grid.h)
    means = np.array([p[1] for p in bins])
    steps = np.diff(means)
    mono = float(max(0.0, steps.max())) if steps.size else 0.0
    strict = bool(steps.size and np.all(steps < -10 * np.finfo(float).eps))
    sym = (not note) and dev <= tols.tol_sym and mono <= tols.tol_mono
    return SymmetryReport(tuple(center), float(dev), mono, "Symmetric" if sym else "Asymmetric",
                          tuple(lm), tuple(lp), strict, note.strip())


# --- Hopf -----------------------------------------------------------------------


@dataclass
class HopfReport:
    derivative: np.ndarray  # per plane-adjacent column
    tested: np.ndarray  # columns where psi is supported
    most_negative: float
    least_negative: float
    status: str


def hopf_derivative(psi: AntisymField, support_tol: float = 0.0) -> HopfReport:
    """One-sided outward normal derivative ``(0 - psi(first node left)) / (h/2)`` per column.

    Columns are tested where the first node left of the plane carries
    ``|psi| > support_tol``. ``status`` is NOT-APPLICABLE if none do or if psi is
    negative somewhere on them (the Hopf hypothesis is psi > 0).
    """
    grid, plane = psi.grid, psi.plane
    m = grid.plane_index(plane.lam)
    col = m - 1 + grid.n // 2
    if not 0 <= col < grid.n:
        raise GridError("no node adjacent to the plane on the Sigma side")
    vals = np.take(psi.values, col, axis=plane.axis)
    deriv = -np.asarray(vals, dtype=float).ravel() / (grid.h / 2)
    tested = np.abs(vals.ravel()) > support_tol
    if not tested.any() or np.any(vals.ravel()[tested] < 0) or np.max(psi.sigma_values) <= support_tol:
        return HopfReport(deriv, tested, 0.0, 0.0, NA)
    d = deriv[tested]
    return HopfReport(deriv, tested, float(d.min()), float(d.max()), PASS if d.max() < 0 else FAIL)


# --- linear principle checks ----------------------------------------------------

PRINCIPLES = ("MaxPrinciple", "AntisymMax", "NarrowRegion", "NearInfinity", "UnionRegion",
              "StrongMax", "AntisymStrongMax", "Hopf")


@dataclass
class LinearSetup:
    """Data for  w_t + (-Delta)^s w = c(x,t) w  on ``omega``.

    ``omega`` is a lattice mask; with ``antisymmetric`` it must lie on ``side``
    of the plane (``minus`` is ``Sigma_lam``) and the mirror half is slaved to
    ``-w``. Nodes outside ``omega`` on that side are held at ``exterior``. ``c`` is either an array over
    the lattice or a callable ``c(t) -> array``; ``c_bounds = (inf, sup)`` must
    bound it on ``omega``.
    """

    grid: Grid
    s: float
    omega: np.ndarray
    w0: np.ndarray
    c: np.ndarray | Callable[[float], np.ndarray]
    c_bounds: tuple[float, float]
    exterior: np.ndarray | None = None
    plane: PlaneReflection | None = None
    antisymmetric: bool = True
    narrow: np.ndarray | None = None  # narrow part of omega (NarrowRegion / UnionRegion)
    far: np.ndarray | None = None  # part near infinity (NearInfinity / UnionRegion)
    sigma: float = 0.0
    side: str = "minus"
    T: float = 3.0
    snap_every: float = 0.25
    max_doublings: int = 5


@dataclass
class PrincipleReport:
    principle: str
    hypothesis: str  # "met" or the reason it is not
    stats: dict
    status: str


def _c_at(setup: LinearSetup, t: float) -> np.ndarray:
    c = setup.c(t) if callable(setup.c) else setup.c
    return np.broadcast_to(np.asarray(c, dtype=float).ravel(), (setup.grid.size,))


def _antisym_operator(kernel: KernelMatrix, plane: PlaneReflection, nodes: np.ndarray) -> np.ndarray:
    """Discrete operator on ``nodes`` (Sigma side) acting on antisymmetric data with
    zero values off ``nodes``: ``diag - A_ij + A_ij'``."""
    img = reflection_map(kernel.grid, plane)
    idx = np.flatnonzero(nodes)
    L = -kernel.A[np.ix_(idx, idx)].copy()
    L[np.diag_indices_from(L)] += kernel.diag[idx]
    has = img[idx] >= 0
    # A[i, j'] for j in idx with image inside the lattice
    cols = img[idx]
    L[:, has] += kernel.A[np.ix_(idx, cols[has])]
    return L


def principal_eigenvalue(kernel: KernelMatrix, nodes: np.ndarray, plane: PlaneReflection | None) -> float:
    """Smallest eigenvalue of the (antisymmetric) Dirichlet operator restricted to ``nodes``."""
    if plane is None:
        idx = np.flatnonzero(nodes)
        L = -kernel.A[np.ix_(idx, idx)].copy()
        L[np.diag_indices_from(L)] += kernel.diag[idx]
    else:
        L = _antisym_operator(kernel, plane, nodes)
    L = 0.5 * (L + L.T)
    return float(np.linalg.eigvalsh(L)[0])


def _linear_dt(kernel: KernelMatrix, setup: LinearSetup) -> float:
    diag = kernel.diag
    if setup.antisymmetric and setup.plane is not None:
        img = reflection_map(kernel.grid, setup.plane)
        idx = np.flatnonzero(setup.omega)
        has = img[idx] >= 0
        extra = np.zeros(idx.size)
        extra[has] = np.maximum(0.0, kernel.A[idx[has], img[idx][has]])
        worst = float(np.max(diag[idx] + extra))
    else:
        worst = float(np.max(diag))
    cmax = max(abs(setup.c_bounds[0]), abs(setup.c_bounds[1]))
    return 0.9 / (worst + cmax)


def evolve_linear(setup: LinearSetup, kernel: KernelMatrix | None = None, T: float | None = None):
    """Explicit monotone scheme for the linear problem. Returns ``(times, snapshots)``."""
    grid = setup.grid
    kernel = kernel or build_kernel(grid, setup.s, ExteriorSpec("zero"))
    T = setup.T if T is None else T
    w = np.asarray(setup.w0, dtype=float).ravel().copy()
    om = np.asarray(setup.omega, dtype=bool).ravel()
    ext = np.zeros(grid.size) if setup.exterior is None else np.asarray(setup.exterior, float).ravel()
    if setup.antisymmetric:
        if setup.plane is None:
            raise ValueError("antisymmetric setup needs a plane")
        img = reflection_map(grid, setup.plane)
        sig = side_mask(grid, setup.plane, setup.side).ravel()
        fixed = sig & ~om
        w[fixed] = ext[fixed]
        # images outside the lattice read zero, so nodes without an image stay consistent
        src = np.flatnonzero(sig & (img >= 0))
        w[img[src]] = -w[src]
        w[~sig & (img < 0)] = 0.0
    else:
        w[~om] = ext[~om]
    dt = _linear_dt(kernel, setup)
    n_snap = max(1, int(round(T / setup.snap_every)))
    times = np.linspace(0.0, T, n_snap + 1)
    snaps = np.zeros((n_snap + 1, grid.size))
    snaps[0] = w
    idx = np.flatnonzero(om)
    A_rows = np.ascontiguousarray(kernel.A[idx])
    d = kernel.diag[idx]
    t = 0.0
    for k in range(1, n_snap + 1):
        while t < times[k] - 1e-12:
            step = min(dt, times[k] - t)
            c = _c_at(setup, t)[idx]
            lw = d * w[idx] - A_rows @ w
            w[idx] = w[idx] + step * (c * w[idx] - lw)
            if setup.antisymmetric:
                ok = img[idx] >= 0
                w[img[idx][ok]] = -w[idx][ok]
            t += step
        if not np.all(np.isfinite(w)):
            raise FloatingPointError("linear evolution diverged")
        snaps[k] = w
    return times, snaps


def _hypotheses(setup: LinearSetup, principle: str, kernel: KernelMatrix) -> tuple[str, dict]:
    grid = setup.grid
    om = np.asarray(setup.omega, bool).ravel()
    stats: dict = {}
    if not om.any():
        return "empty region", stats
    cmin, csup = setup.c_bounds
    c0 = _c_at(setup, 0.0)[om]
    if not np.isfinite(csup) or c0.max() > csup + 1e-12 or c0.min() < cmin - 1e-12:
        return "c not bounded by c_bounds on omega", stats
    ext = np.zeros(grid.size) if setup.exterior is None else np.asarray(setup.exterior, float).ravel()
    if setup.antisymmetric:
        if setup.plane is None:
            return "no plane", stats
        sig = side_mask(grid, setup.plane, setup.side).ravel()
        if np.any(om & ~sig):
            return f"omega not contained in the {setup.side} half-space", stats
        if np.any(ext[sig & ~om] < 0):
            return "exterior data negative on Sigma_lambda minus omega", stats
    elif np.any(ext[~om] < 0):
        return "exterior data negative", stats
    w0 = np.asarray(setup.w0, float).ravel()
    if principle in ("MaxPrinciple", "AntisymMax"):
        if np.any(w0[om] < 0):
            return "initial data negative on omega", stats
        if principle == "AntisymMax" and not setup.antisymmetric:
            return "setup is not antisymmetric", stats
        return "met", stats
    if principle in ("NarrowRegion", "UnionRegion"):
        narrow = om if setup.narrow is None else np.asarray(setup.narrow, bool).ravel()
        if principle == "UnionRegion" and setup.narrow is None:
            return "union region needs a narrow part", stats
        x = grid.mesh()[setup.plane.axis].ravel()
        if not narrow.any():
            width = 0.0
        elif setup.side == "minus":
            width = float(setup.plane.lam - x[narrow].min() + grid.h / 2)
        else:
            width = float(x[narrow].max() - setup.plane.lam + grid.h / 2)
        mu1 = principal_eigenvalue(kernel, narrow, setup.plane)
        c_narrow = float(_c_at(setup, 0.0)[narrow].max()) if narrow.any() else -np.inf
        bound = csup if principle == "NarrowRegion" else c_narrow
        stats.update(width=width, mu1=mu1, c_sup_narrow=bound)
        if not mu1 > bound:
            return f"region not narrow enough: mu1={mu1:.4g} <= sup c={bound:.4g}", stats
        if principle == "NarrowRegion":
            return "met", stats
    if principle in ("NearInfinity", "UnionRegion"):
        far = om if setup.far is None else np.asarray(setup.far, bool).ravel()
        if setup.sigma <= 0:
            return "sigma must be positive", stats
        cf = _c_at(setup, 0.0)[far]
        stats["c_sup_far"] = float(cf.max()) if cf.size else -np.inf
        if principle == "NearInfinity" and not (csup < -setup.sigma):
            return f"c bound {csup:.4g} not below -sigma={-setup.sigma:.4g}", stats
        if cf.size and cf.max() >= -setup.sigma:
            return "c not below -sigma near infinity", stats
        return "met", stats
    if principle == "AntisymStrongMax":
        if not setup.antisymmetric:
            return "setup is not antisymmetric", stats
        if np.any(w0[om] < 0):
            return "initial data negative (lim inf >= 0 not ensured)", stats
        if not np.any(w0[om] > 0):
            return "psi not positive anywhere", stats
        return "met", stats
    return f"unsupported principle {principle}", stats


def principle_check(setup: LinearSetup, principle: str, tol_mp: float = 1e-10,
                    kernel: KernelMatrix | None = None) -> PrincipleReport:
    """Check one maximum principle on a linear (antisymmetric) evolution.

    Finite-time principles (``MaxPrinciple``, ``AntisymMax``) require
    ``min w >= -tol_mp`` on ``omega`` over the whole run. Asymptotic ones use the
    minimum over the last half of the snapshots as the lim-inf proxy; the horizon
    is doubled until that proxy is nonnegative within ``tol_mp`` or stops
    improving. ``AntisymStrongMax`` requires strict positivity on ``omega`` at
    every positive snapshot time. ``StrongMax`` and ``Hopf`` work on nonlinear
    limits; see :func:`strong_max_dichotomy` and :func:`hopf_derivative`.
    """
    if principle not in PRINCIPLES:
        raise ValueError(f"unknown principle {principle!r}")
    if principle in ("StrongMax", "Hopf"):
        raise ValueError(f"{principle} is checked on nonlinear limits, not a LinearSetup")
    kernel = kernel or build_kernel(setup.grid, setup.s, ExteriorSpec("zero"))
    hyp, stats = _hypotheses(setup, principle, kernel)
    if hyp != "met":
        return PrincipleReport(principle, hyp, stats, NA)
    om = np.asarray(setup.omega, bool).ravel()
    if principle in ("MaxPrinciple", "AntisymMax"):
        times, snaps = evolve_linear(setup, kernel)
        m = float(snaps[:, om].min())
        stats.update(min_w=m, T=float(times[-1]))
        return PrincipleReport(principle, hyp, stats, PASS if m >= -tol_mp else FAIL)
    if principle == "AntisymStrongMax":
        times, snaps = evolve_linear(setup, kernel)
        later = snaps[1:, :][:, om]
        sup = np.max(np.abs(later), axis=1)
        rel_min = float(np.min(later.min(axis=1) / np.where(sup > 0, sup, 1.0)))
        stats.update(min_relative=rel_min, T=float(times[-1]))
        return PrincipleReport(principle, hyp, stats, PASS if rel_min > 0 else FAIL)
    T = setup.T
    history = []
    for _ in range(setup.max_doublings + 1):
        times, snaps = evolve_linear(setup, kernel, T)
        late = snaps[times >= times[-1] / 2][:, om]
        proxy = float(late.min())
        history.append((T, proxy))
        if proxy >= -tol_mp:
            break
        if len(history) > 1 and proxy <= history[-2][1]:
            break
        T *= 2
    stats.update(liminf_proxy=history[-1][1], T=history[-1][0], history=history)
    return PrincipleReport(principle, hyp, stats, PASS if history[-1][1] >= -tol_mp else FAIL)


def strong_max_dichotomy(phi: Field, omega: np.ndarray, tol: float = 1e-6,
                         tol_pos: float | None = None) -> PrincipleReport:
    """Either ``phi <= tol`` on all of ``omega`` or ``phi >= tol_pos`` everywhere there."""
    tol_pos = tol if tol_pos is None else tol_pos
    v = phi.flat[np.asarray(omega, bool).ravel()]
    zero = bool(np.all(np.abs(v) <= tol))
    positive = bool(np.all(v >= tol_pos))
    stats = {"min": float(v.min()), "max": float(v.max())}
    branch = "zero" if zero else ("positive" if positive else "mixed")
    stats["branch"] = branch
    return PrincipleReport("StrongMax", "met", stats, PASS if branch != "mixed" else FAIL)
