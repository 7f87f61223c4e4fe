"""Experiment pipelines behind the acceptance checks.

Each pipeline returns a :class:`CheckResult` whose ``stats`` are plain JSON data.
Large arrays (trajectories, final fields) travel separately in ``artifacts`` so
that the report stays small and byte-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import barriers as bar
from .evolve import (IntegrationDiverged, Nonlinearity, Trajectory, ball_logistic, evolve,
                     linear_decay, ode_xi, schrodinger, zero_reaction)
from .fraclap import (ExteriorSpec, Field, KernelMatrix, bump, bump_constant_exact, c_norm,
                      bump_constant_quadrature, build_kernel, sign_check_A2, step_constant)
from .grid import Grid, PlaneReflection, build_grid, reflection_map, side_mask
from .movplane import (PASS, FAIL, NA, LinearSetup, SymmetryTols, asymmetry_center,
                       hopf_derivative, principal_eigenvalue, principle_check, symmetry_report,
                       w_lambda)
from .omega import liminf_check, omega_limit

CRITERIA = {
    "C1": "oracle suite: bump constancy, step law, sign check",
    "C2": "Poisson-kernel evolution",
    "C3": "discrete maximum principles",
    "C4": "xi decay bound",
    "C5": "ball asymptotic symmetry",
    "C6": "whole-space asymptotic symmetry",
    "C7": "Hopf derivative on symmetric verdicts",
    "C8": "barrier and subsolution constructions",
    "C9": "determinism of reports",
}


@dataclass
class CheckResult:
    id: str
    status: str
    stats: dict
    artifacts: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {"id": self.id, "title": CRITERIA.get(self.id, ""), "status": self.status,
                "stats": jsonable(self.stats)}


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def combine(statuses: Sequence[str]) -> str:
    if FAIL in statuses:
        return FAIL
    if NA in statuses:
        return NA
    return PASS


# --- catalogs -----------------------------------------------------------------------

NONLINEARITIES: dict[str, tuple[Callable[..., Nonlinearity], str]] = {
    "schrodinger-p3": (lambda **p: schrodinger(p=3, **p), "f(u) = scale*(u^3 - u); whole-space decay condition"),
    "linear-decay": (linear_decay, "f(u) = -rate*u"),
    "ball-logistic": (ball_logistic, "f(u) = scale*(u - u^3); f(t,0) = 0 >= 0"),
    "zero": (zero_reaction, "f = 0 (pure fractional heat flow)"),
}


def make_nonlinearity(spec: dict) -> Nonlinearity:
    factory, _ = NONLINEARITIES[spec["id"]]
    return factory(**spec.get("params", {}))


def _ball_bumps(grid: Grid, rng: np.random.Generator, n_bumps: int = 2, base: float = 0.3,
                amp: float = 0.8, width: float = 0.25) -> np.ndarray:
    """Positive data vanishing outside ``B_1``: ``(1-|x|^2)_+ (base + random Gaussian bumps)``."""
    mesh = grid.mesh()
    r2 = grid.norm2()
    vals = np.full(grid.shape, base)
    for _ in range(n_bumps):
        c = rng.uniform(-0.6, 0.6, grid.dim)
        a = amp * rng.uniform(0.5, 1.0)
        vals = vals + a * np.exp(-sum((m - ci) ** 2 for m, ci in zip(mesh, c)) / width**2)
    return np.where(r2 < 1.0, (1.0 - r2) * vals, 0.0)


def _shifted_bump(grid: Grid, rng: np.random.Generator, center: float = 0.5, amp: float = 0.3,
                  width: float = 1.0, skew: float = 0.3) -> np.ndarray:
    """``amp e^{-|x-c|^2/width^2} (1 + skew tanh(x_1 - c) + small random ripple)``."""
    c = np.zeros(grid.dim)
    c[0] = center
    mesh = grid.mesh()
    g = np.exp(-grid.norm2(c) / width**2)
    ripple = rng.uniform(-0.05, 0.05) * np.sin(3 * (mesh[0] - center))
    return amp * g * (1 + skew * np.tanh(mesh[0] - center) + ripple)


def _poisson(grid: Grid, rng: np.random.Generator, t: float = 1.0) -> np.ndarray:
    x = grid.mesh()[0]
    return t / (math.pi * (t * t + x * x))


INITIAL_DATA: dict[str, tuple[Callable[..., np.ndarray], str]] = {
    "ball-bumps": (_ball_bumps, "positive asymmetric bumps times (1-|x|^2)_+, seeded"),
    "shifted-bump": (_shifted_bump, "skewed Gaussian centred at x_1 = center, seeded ripple"),
    "poisson": (_poisson, "1D Poisson kernel t/(pi(t^2+x^2)) at time t"),
}


def make_initial(spec: dict, grid: Grid, rng: np.random.Generator) -> np.ndarray:
    factory, _ = INITIAL_DATA[spec["id"]]
    return np.asarray(factory(grid, rng, **spec.get("params", {})), dtype=float)


# --- C1: oracles --------------------------------------------------------------------


def oracle_bump(s_values: Sequence[float] = (0.25, 0.5, 0.75), h: float = 1 / 256,
                inner: float = 0.9, tol: float = 0.02) -> dict:
    """Discrete ``(-Delta)^s (1-x^2)_+^s`` on ``|x| < inner``: spread and value vs quadrature."""
    grid = build_grid(1, 2.0, h)
    x = grid.axis
    inside = np.abs(x) < inner
    rows, ok = [], True
    for s in s_values:
        k = build_kernel(grid, s)
        out = k.apply(bump(x, s))[inside]
        mean = float(out.mean())
        spread = float((out.max() - out.min()) / mean)
        quad = bump_constant_quadrature(s)
        rel = abs(mean - quad) / quad
        good = spread <= tol and rel <= tol
        ok &= good
        rows.append({"s": s, "mean": mean, "relative_spread": spread, "quadrature": quad,
                     "closed_form": bump_constant_exact(1, s), "relative_error": rel,
                     "status": PASS if good else FAIL})
    return {"status": PASS if ok else FAIL, "cases": rows}


def step_exterior_correction(x: np.ndarray, s: float, R: float) -> np.ndarray:
    """Contribution of the ``+-1`` continuation of the step beyond a lattice of half-width ``R``
    that a zero-exterior apply misses, at ``0 < x < R``."""
    return -c_norm(1, s) / (2 * s) * ((R - x) ** (-2 * s) - (R + x) ** (-2 * s))


def oracle_step(s_values: Sequence[float] = (0.25, 0.5, 0.75), h: float = 1 / 256, radius: float = 2.0,
                window: tuple[float, float] = (0.1, 0.5), tol_exp: float = 0.05,
                tol_val: float = 0.05) -> dict:
    """Fitted exponent and value of the discrete step law ``C / x^{2s}`` on ``window``."""
    grid = build_grid(1, radius, h)
    x = grid.axis
    step = np.where(x >= 0, 1.0, -1.0)
    sel = (x >= window[0]) & (x <= window[1])
    rows, ok = [], True
    for s in s_values:
        k = build_kernel(grid, s)
        out = k.apply(step)[sel] + step_exterior_correction(x[sel], s, radius)
        slope, icpt = np.polyfit(np.log(x[sel]), np.log(out), 1)
        C = step_constant(s)
        rel = float(np.max(np.abs(out * x[sel] ** (2 * s) / C - 1.0)))
        good = abs(-slope - 2 * s) <= tol_exp and rel <= tol_val
        ok &= good
        rows.append({"s": s, "fitted_exponent": float(-slope), "expected_exponent": 2 * s,
                     "fitted_constant": float(math.exp(icpt)), "C": C, "max_relative_error": rel,
                     "status": PASS if good else FAIL})
    return {"status": PASS if ok else FAIL, "cases": rows}


def negative_left_field(grid: Grid, mu: float, rng: np.random.Generator) -> np.ndarray:
    """Random field antisymmetric about ``x_1 = mu`` and negative at every node left of it."""
    y = grid.mesh()[0] - mu
    a = rng.uniform(0.5, 2.0)
    b = rng.uniform(0.1, 0.8)
    c = rng.uniform(0.5, 2.0)
    return a * np.tanh(y / b) * np.exp(-(y / c) ** 2) + rng.uniform(0, 0.3) * y * np.exp(-y * y)


def oracle_sign(rng: np.random.Generator, n: int = 10, h: float = 1 / 32) -> dict:
    """Sign check of the modified difference on ``n`` random negative-left antisymmetric fields."""
    grid = build_grid(1, 2.0, h)
    rows, ok = [], True
    kernels: dict[float, KernelMatrix] = {}
    for _ in range(n):
        s = float(np.round(rng.uniform(0.2, 0.8), 3))
        mu = int(rng.integers(1, 9)) * h
        k = kernels.setdefault(s, build_kernel(grid, s))
        w = negative_left_field(grid, mu, rng)
        rep = sign_check_A2(Field(grid, w), mu, k)
        ok &= rep.status == PASS
        rows.append({"s": s, "mu": mu, "max_difference": rep.max_difference, "status": rep.status})
    return {"status": PASS if ok else FAIL, "cases": rows}


def check_oracles(rng: np.random.Generator, h_oracle: float = 1 / 256, n_sign: int = 10) -> CheckResult:
    a = oracle_bump(h=h_oracle)
    b = oracle_step(h=h_oracle)
    c = oracle_sign(rng, n_sign)
    return CheckResult("C1", combine([a["status"], b["status"], c["status"]]),
                       {"bump_constancy": a, "step_law": b, "sign_check": c})


# --- C2: Poisson kernel ---------------------------------------------------------------


def check_poisson(radius: float = 16.0, h: float = 1 / 128, T: float = 1.0, snap_every: float = 0.25,
                  tol: float = 0.03) -> CheckResult:
    """Evolve ``P_1`` under the half heat equation and compare with ``P_{1+T}``."""
    grid = build_grid(1, radius, h)
    ext = ExteriorSpec("decay")
    k = build_kernel(grid, 0.5, ext)
    x = grid.axis
    P = lambda t: t / (math.pi * (t * t + x * x))  # noqa: E731
    traj = evolve(Field(grid, P(1.0), 0.0, ext), zero_reaction(), k, T, snap_every)
    exact = P(1.0 + T)
    err = float(np.max(np.abs(traj.values[-1] - exact)) / np.max(exact))
    stats = {"radius": radius, "h": h, "T": T, "dt": traj.dt, "relative_sup_error": err, "tol": tol,
             "ring_max_final": float(traj.ring_max[-1]),
             "truncation_residual_bound": float(traj.residual_bound.max())}
    return CheckResult("C2", PASS if err <= tol else FAIL, stats,
                       {"trajectory": traj, "fields": {"poisson_final": traj.field(len(traj) - 1)}})


# --- C3: maximum principles ---------------------------------------------------------------


def _antisym_w0(grid: Grid, plane: PlaneReflection, w_sigma: np.ndarray, side: str = "minus") -> np.ndarray:
    sig = side_mask(grid, plane, side).ravel()
    img = reflection_map(grid, plane)
    w = np.where(sig, w_sigma, 0.0)
    src = np.flatnonzero(sig & (img >= 0))
    w[img[src]] = -w[src]
    return w


def _plane(grid: Grid, rng: np.random.Generator, lo: int, hi: int) -> PlaneReflection:
    return PlaneReflection(0, int(rng.integers(lo, hi + 1)) * grid.h)


def principle_instance(principle: str, rng: np.random.Generator, grid: Grid) -> LinearSetup:
    """A random linear setup inside the hypotheses of ``principle`` (1D)."""
    x = grid.axis
    s = float(np.round(rng.uniform(0.25, 0.75), 3))
    n = grid.size
    if principle == "MaxPrinciple":
        r = rng.uniform(0.5, 1.5)
        om = np.abs(x) < r
        c = rng.uniform(-5, 5, n)
        w0 = np.where(om, rng.uniform(0, 1, n), 0.0)
        ext = np.where(om, 0.0, rng.uniform(0, 1, n))
        return LinearSetup(grid, s, om, w0, c, (float(c.min()), float(c.max())), exterior=ext,
                           antisymmetric=False, T=3.0)
    plane = _plane(grid, rng, -8, 8)
    lam = plane.lam
    sig = x < lam
    if principle == "AntisymMax":
        om = sig & (x > lam - rng.uniform(0.5, 1.5))
        c = rng.uniform(-5, 5, n)
        wsig = np.where(om, rng.uniform(0, 1, n), rng.uniform(0, 1, n) * (rng.uniform() < 0.5))
        w0 = _antisym_w0(grid, plane, wsig)
        return LinearSetup(grid, s, om, w0, c, (float(c.min()), float(c.max())), exterior=w0.copy(),
                           plane=plane, T=3.0)
    kern = build_kernel(grid, s)
    narrow = sig & (x > lam - 0.25)
    mu1 = principal_eigenvalue(kern, narrow, plane)
    if principle == "NarrowRegion":
        om = narrow
        c_hi = rng.uniform(0.3, 0.9) * mu1
        c = rng.uniform(-1.0, c_hi, n)
        wsig = np.where(om, -rng.uniform(0.1, 1.0, n) * (rng.uniform(size=n) < 0.6),
                        rng.uniform(0, 1, n))
        w0 = _antisym_w0(grid, plane, wsig)
        return LinearSetup(grid, s, om, w0, c, (float(c[om].min()), float(c[om].max())),
                           exterior=w0.copy(), plane=plane, narrow=om, T=3.0)
    sigma = rng.uniform(0.2, 1.0)
    if principle == "NearInfinity":
        plane = _plane(grid, rng, -8, 8)
        lam = plane.lam
        far = (x < lam) & (np.abs(x) > 1.0)
        c = np.where(far, rng.uniform(-3.0, -sigma - 0.05, n), rng.uniform(-1, 1, n))
        wsig = np.where(far, -rng.uniform(0.1, 1.0, n) * (rng.uniform(size=n) < 0.6), rng.uniform(0, 1, n))
        w0 = _antisym_w0(grid, plane, wsig)
        return LinearSetup(grid, s, far, w0, c, (float(c[far].min()), float(c[far].max())),
                           exterior=w0.copy(), plane=plane, far=far, sigma=sigma, T=3.0)
    if principle == "UnionRegion":
        plane = _plane(grid, rng, 0, 8)
        lam = plane.lam
        narrow = (x < lam) & (x > lam - 0.25)
        mu1 = principal_eigenvalue(kern, narrow, plane)
        far = x < -1.0
        om = narrow | far
        c = np.where(narrow, rng.uniform(-1.0, rng.uniform(0.3, 0.9) * mu1, n),
                     np.where(far, rng.uniform(-3.0, -sigma - 0.05, n), 0.0))
        wsig = np.where(om, -rng.uniform(0.1, 1.0, n) * (rng.uniform(size=n) < 0.6), rng.uniform(0, 1, n))
        w0 = _antisym_w0(grid, plane, wsig)
        return LinearSetup(grid, s, om, w0, c, (float(c[om].min()), float(c[om].max())),
                           exterior=w0.copy(), plane=plane, narrow=narrow, far=far, sigma=sigma, T=3.0)
    raise ValueError(f"no generator for {principle}")


def violation_instances(rng: np.random.Generator) -> list[tuple[str, str, LinearSetup]]:
    """Five setups that break one hypothesis each; every one must come back NOT-APPLICABLE."""
    out = []
    g3 = build_grid(1, 3.0, 1 / 8)
    x3 = g3.axis
    plane = PlaneReflection(0, 1.0)
    slab = (x3 < 1.0) & (x3 > -3.0)
    w0 = _antisym_w0(g3, plane, np.where(slab, -0.5, 0.0))
    out.append(("NarrowRegion", "slab of width 4 with c = 10",
                LinearSetup(g3, 0.5, slab, w0, np.full(g3.size, 10.0), (10.0, 10.0), plane=plane, narrow=slab)))
    g = build_grid(1, 2.0, 1 / 16)
    x = g.axis
    p0 = PlaneReflection(0, 0.0)
    far = x < -1.0
    w0 = _antisym_w0(g, p0, np.where(far, -0.5, 0.2))
    out.append(("NearInfinity", "c = +1 near infinity",
                LinearSetup(g, 0.5, far, w0, np.full(g.size, 1.0), (1.0, 1.0), exterior=w0.copy(),
                            plane=p0, far=far, sigma=0.5)))
    om = np.abs(x) < 1.0
    ext = np.where(om, 0.0, -rng.uniform(0.1, 1.0, g.size))
    out.append(("MaxPrinciple", "negative exterior data",
                LinearSetup(g, 0.5, om, np.where(om, 0.5, 0.0), np.zeros(g.size), (0.0, 0.0), exterior=ext,
                            antisymmetric=False)))
    om = (x < 0) & (x > -1.0)
    w0 = _antisym_w0(g, p0, np.where(om, -rng.uniform(0.1, 1.0, g.size), 0.0))
    out.append(("AntisymMax", "negative initial data",
                LinearSetup(g, 0.5, om, w0, np.zeros(g.size), (0.0, 0.0), plane=p0)))
    out.append(("UnionRegion", "no narrow part given",
                LinearSetup(g, 0.5, far, _antisym_w0(g, p0, np.where(far, -0.5, 0.2)), np.full(g.size, -2.0),
                            (-2.0, -2.0), plane=p0, far=far, sigma=0.5)))
    return out


MP_PRINCIPLES = ("MaxPrinciple", "AntisymMax", "NarrowRegion", "NearInfinity", "UnionRegion")


def check_principles(rng: np.random.Generator, n: int = 20, tol_mp: float = 1e-10,
                     h: float = 1 / 16) -> CheckResult:
    grid = build_grid(1, 2.0, h)
    per: dict[str, dict] = {}
    ok = True
    for p in MP_PRINCIPLES:
        counts = {PASS: 0, FAIL: 0, NA: 0}
        worst = math.inf
        notes = []
        for _ in range(n):
            setup = principle_instance(p, rng, grid)
            rep = principle_check(setup, p, tol_mp)
            counts[rep.status] += 1
            val = rep.stats.get("min_w", rep.stats.get("liminf_proxy", math.nan))
            worst = min(worst, val)
            if rep.status != PASS:
                notes.append(rep.hypothesis)
        ok &= counts[PASS] == n
        per[p] = {"counts": counts, "worst_statistic": worst, "non_pass_reasons": sorted(set(notes))}
    viol = []
    for p, why, setup in violation_instances(rng):
        rep = principle_check(setup, p, tol_mp)
        ok &= rep.status == NA
        viol.append({"principle": p, "violation": why, "status": rep.status, "reason": rep.hypothesis})
    return CheckResult("C3", PASS if ok else FAIL, {"instances_per_principle": n, "tol_mp": tol_mp,
                                                     "principles": per, "violations": viol})


# --- C4: comparison ODE ---------------------------------------------------------------------


def check_xi(T: float = 20.0, tol: float = 1e-6) -> CheckResult:
    cases = []
    for nl, eps0 in ((schrodinger(3, sigma=0.5), 0.1), (linear_decay(1.0), 0.1)):
        rep = ode_xi(nl, 0.0, eps0, T, tol)
        cases.append({"preset": nl.name, "sigma": nl.sigma, "eps0": eps0, "max_ratio": rep.max_ratio,
                      "min_xi": rep.min_value, "status": rep.status})
    return CheckResult("C4", combine([c["status"] for c in cases]), {"T": T, "tol": tol, "cases": cases})


# --- C5-C7: symmetry of limits ---------------------------------------------------------------


@dataclass
class SettledRun:
    trajectories: list[Trajectory]
    omega: object
    report: object
    history: list[dict]

    @property
    def phi(self) -> Field:
        return self.omega.phi


def settle(field0: Field, nl: Nonlinearity, kernel: KernelMatrix, T0: float, snap_every: float,
           tols: SymmetryTols, max_doublings: int = 8) -> SettledRun:
    """Two-run stability protocol: extend the horizon ``T -> 2T`` until the run has
    converged at two consecutive horizons with the same symmetry verdict."""
    trajs = [evolve(field0, nl, kernel, T0, snap_every)]
    history = []
    prev = None
    T = T0
    for _ in range(max_doublings + 1):
        traj = trajs[-1]
        om = omega_limit(traj, tols.tol_omega)
        rep = symmetry_report(om.phi, tols)
        history.append({"T": T, "omega": om.status, "cauchy_gap": om.cauchy_gap, "verdict": rep.verdict,
                        "sup": float(np.max(np.abs(om.phi.values)))})
        if om.converged and prev == rep.verdict:
            return SettledRun(trajs, om, rep, history)
        prev = rep.verdict if om.converged else None
        trajs.append(evolve(traj.field(len(traj) - 1), nl, kernel, 2 * T, snap_every))
        T *= 2
    return SettledRun(trajs, om, rep, history)


def hopf_planes(phi: Field, center: Sequence[float], support_rel: float = 1e-6,
                lo: float | None = None) -> dict:
    """Hopf derivative at every grid plane ``lo <= lam < center`` on every axis.

    Columns are tested where ``|psi|`` at the plane-adjacent node exceeds
    ``support_rel * sup|phi|``; the round-off margin is ``10 eps sup|phi| / (h/2)``.
    """
    grid = phi.grid
    sup = float(np.max(np.abs(phi.values)))
    margin = 10 * np.finfo(float).eps * sup / (grid.h / 2)
    rows, ok = [], True
    for ax in range(grid.dim):
        start = -grid.radius + grid.h if lo is None else lo
        m0 = int(round(start / grid.h))
        m1 = int(math.ceil(center[ax] / grid.h - 1e-9)) - 1  # last plane strictly left of the centre
        for m in range(m0, m1 + 1):
            plane = PlaneReflection(ax, m * grid.h)
            rep = hopf_derivative(w_lambda(phi, plane), support_tol=support_rel * sup)
            good = rep.status == PASS and rep.least_negative <= -margin
            ok &= good
            rows.append({"axis": ax, "lam": plane.lam, "most_negative": rep.most_negative,
                         "least_negative": rep.least_negative, "columns": int(rep.tested.sum()),
                         "status": PASS if good else (rep.status if rep.status != PASS else FAIL)})
    return {"status": (PASS if ok else FAIL) if rows else NA, "roundoff_margin": margin,
            "planes_tested": len(rows), "worst_least_negative": max((r["least_negative"] for r in rows),
                                                                    default=math.nan),
            "failures": [r for r in rows if r["status"] != PASS]}


def ball_case(dim: int, s: float, h: float, u0: np.ndarray, nl: Nonlinearity, T0: float, snap_every: float,
              tols: SymmetryTols, kernel: KernelMatrix | None = None,
              radius: float = 1.0) -> tuple[dict, SettledRun]:
    grid = build_grid(dim, radius, h)
    ext = ExteriorSpec("zero", 1.0)
    kernel = kernel or build_kernel(grid, s, ext)
    run = settle(Field(grid, u0, 0.0, ext), nl, kernel, T0, snap_every, tols)
    rep = run.report
    center_ok = bool(np.all(np.abs(np.asarray(rep.center)) <= 2 * h + 1e-12))
    ok = run.omega.converged and rep.verdict == "Symmetric" and center_ok
    out = {"dim": dim, "s": s, "h": h, "omega": run.omega.status, "cauchy_gap": run.omega.cauchy_gap,
           "T_final": run.history[-1]["T"], "verdict": rep.verdict, "center": list(rep.center),
           "radial_deviation": rep.radial_deviation, "monotonicity_violation": rep.monotonicity_violation,
           "strictly_decreasing": rep.strictly_decreasing, "sup_phi": run.history[-1]["sup"],
           "note": rep.note, "history": run.history, "status": PASS if ok else FAIL}
    return out, run


def symmetric_limit_hopf(run: SettledRun) -> dict:
    """Hopf data on the planes ``-1 + h <= lam < centre`` of a ball limit."""
    return hopf_planes(run.phi, run.report.center, lo=-1.0 + run.phi.grid.h)


def check_ball(dims: Sequence[int], s: float, h_by_dim: dict, nl: Nonlinearity, rng: np.random.Generator,
               n_data: int, T0: float, snap_every: float, tols: SymmetryTols,
               initial: dict | None = None, radius: float = 1.0) -> tuple[CheckResult, list[dict]]:
    """Criterion 5 plus the Hopf data (criterion 7) from its Symmetric verdicts."""
    rng_check = np.random.default_rng(0)
    if not nl.check_ball(rng_check):
        return CheckResult("C5", NA, {"hypothesis": f"{nl.name} violates f(t,0) >= 0"}), []
    cases, hopf, fields, trajs = [], [], {}, {}
    for dim in dims:
        h = float(h_by_dim[str(dim)] if str(dim) in h_by_dim else h_by_dim[dim])
        grid = build_grid(dim, radius, h)
        kernel = build_kernel(grid, s, ExteriorSpec("zero", 1.0))
        for j in range(n_data):
            spec = initial or {"id": "ball-bumps"}
            u0 = make_initial(spec, grid, rng)
            try:
                case, run = ball_case(dim, s, h, u0, nl, T0, snap_every, tols, kernel, radius)
            except IntegrationDiverged as exc:
                cases.append({"dim": dim, "status": NA, "hypothesis": f"solution not bounded: {exc}"})
                continue
            case["data_index"] = j
            cases.append(case)
            tag = f"ball_{dim}d_{j}"
            fields[tag + "_u0"] = Field(grid, u0, 0.0)
            fields[tag + "_phi"] = run.phi
            trajs[tag] = run.trajectories
            if run.report.verdict == "Symmetric":
                hp = symmetric_limit_hopf(run)
                hp.update(source=tag)
                hopf.append(hp)
    status = combine([c["status"] for c in cases])
    return CheckResult("C5", status, {"s": s, "nonlinearity": nl.name, "cases": cases},
                       {"fields": fields, "trajectories": trajs}), hopf


def check_whole_space(s: float, radius: float, h: float, nl: Nonlinearity, u0_spec: dict,
                      rng: np.random.Generator, T0: float, snap_every: float,
                      tols: SymmetryTols) -> tuple[CheckResult, list[dict]]:
    """Criterion 6: Zero, or Symmetric with matching critical planes and recovered centre."""
    if not nl.check_decay(np.random.default_rng(0)):
        return CheckResult("C6", NA, {"hypothesis": f"{nl.name} violates f(t,0)=0, f_u(t,0) < -sigma"}), []
    grid = build_grid(1, radius, h)
    ext = ExteriorSpec("decay")
    kernel = build_kernel(grid, s, ext)
    u0 = make_initial(u0_spec, grid, rng)
    try:
        run = settle(Field(grid, u0, 0.0, ext), nl, kernel, T0, snap_every, tols)
    except IntegrationDiverged as exc:
        return CheckResult("C6", NA, {"hypothesis": f"solution not bounded: {exc}"}), []
    rep = run.report
    last = run.trajectories[-1]
    lim = liminf_check(last, tols.tol_omega)
    stats = {"s": s, "radius": radius, "h": h, "nonlinearity": nl.name, "omega": run.omega.status,
             "cauchy_gap": run.omega.cauchy_gap, "verdict": rep.verdict, "history": run.history,
             "liminf_check": lim.status, "ring_max_final": float(last.ring_max[-1]),
             "truncation_residual_bound": float(max(t.residual_bound.max() for t in run.trajectories))}
    hopf = []
    if not run.omega.converged:
        status = FAIL
    elif rep.verdict == "Zero":
        status = PASS
    elif rep.verdict == "Symmetric":
        brute = asymmetry_center(run.phi, 0)
        gap = abs(rep.lambda0_plus[0] - rep.lambda0_minus[0])
        stats.update(lambda0_minus=list(rep.lambda0_minus), lambda0_plus=list(rep.lambda0_plus),
                     center=list(rep.center), brute_force_center=brute)
        status = PASS if gap <= 2 * h + 1e-12 and abs(rep.center[0] - brute) <= 2 * h + 1e-12 else FAIL
        hp = hopf_planes(run.phi, rep.center)
        hp.update(source="whole_space")
        hopf.append(hp)
    else:
        status = FAIL
    fields = {"whole_space_u0": Field(grid, u0, 0.0), "whole_space_phi": run.phi}
    return CheckResult("C6", status, stats, {"fields": fields, "trajectories": {"whole_space": run.trajectories}}), hopf


def check_hopf(hopf_reports: list[dict]) -> CheckResult:
    """Every Symmetric verdict must carry a strictly negative normal derivative; with no
    Symmetric verdict the statement holds vacuously (flagged in the stats)."""
    if not hopf_reports:
        return CheckResult("C7", PASS, {"vacuous": True, "note": "no Symmetric verdict to test", "reports": []})
    return CheckResult("C7", combine([r["status"] for r in hopf_reports]),
                       {"vacuous": False, "reports": hopf_reports})


# --- C8: barriers ---------------------------------------------------------------------------


def check_barriers(radius: float = 8.0, h: float = 1 / 16, s: float = 0.5) -> CheckResult:
    grid = build_grid(1, radius, h)
    kernel = build_kernel(grid, s)
    mb = bar.manufactured_barrier(kernel)
    spec = mb.spec
    zeta = bar.zeta_build(mb.w_mu, spec)
    res = bar.residual_L_lambda(zeta, mb.c_lambda, kernel, spec)
    psi = bar.psi_sub_build(zeta, spec, w_lambda=mb.w_lambda)
    glb = bar.global_lower_bound_check(mb.w_lambda, spec)
    bnd = bar.boundary_sub_check(mb.w_lambda, spec.D0(grid), mb.xbar, mb.delta, spec, kernel,
                                 c_lambda=mb.c_lambda)
    sm, sm_half, sm_zero = strongmax_configuration(s)
    # amplitude monotonicity: halve tau in zeta, halve eps in the strong-max subsolution
    spec_half = replace(spec, tau=spec.tau / 2)
    res_half = bar.residual_L_lambda(bar.zeta_build(mb.w_mu, spec_half), mb.c_lambda, kernel, spec_half)
    mono = combine([res_half.status, sm_half.status, sm_zero.status])
    parts = {"zeta_residual": res.status, "psi_initial": psi.initial_status, "psi_exterior": psi.exterior_status,
             "psi_estimate_ii": psi.estimate_ii_status, "global_lower_bound": glb.status,
             "strongmax_subsolution": sm.status, "boundary_subsolution": bnd.status,
             "amplitude_monotonicity": mono}
    stats = {"grid": {"radius": radius, "h": h, "s": s}, "constants": mb.log, "checks": parts,
             "zeta_residual": {"max": res.max_residual, "tol": res.tol, "hypothesis": res.hypothesis,
                               "max_outside_rho1": res.stats["max_outside_rho1"]},
             "psi": psi.stats, "global_lower_bound": {"min_margin": glb.min_margin, "inf_at_tn": glb.inf_at_tn},
             "strongmax": {"eps_admissible": sm.eps_admissible, "lower_bound": sm.lower_bound,
                           "max_residual": sm.max_residual, "comparison_min": sm.comparison_min},
             "boundary": {"max_residual": bnd.max_residual, "exterior_min": bnd.exterior_min,
                          "comparison_min": bnd.comparison_min, "conclusion_value": bnd.conclusion_value,
                          "conclusion_bound": bnd.conclusion_bound, "C1": bnd.C1, "C2": bnd.C2,
                          "hypothesis": bnd.hypothesis},
             "halved": {"tau_residual": res_half.status, "tau_residual_max": res_half.max_residual,
                        "eps_strongmax": sm_half.status, "eps_zero_strongmax": sm_zero.status}}
    fields = {"barrier_w_mu": mb.w_mu.field(0), "barrier_w_lambda_final": mb.w_lambda.field(len(mb.w_lambda) - 1)}
    return CheckResult("C8", combine(list(parts.values())), stats, {"fields": fields})


def strongmax_configuration(s: float = 0.5, h: float = 1 / 32, xbar: float = 1.0, delta: float = 0.25,
                            eps_o: float = 0.5):
    """``D = B_{1/2}``, ``ubar = 1``: the admissible-eps subsolution, its half and ``eps = 0``."""
    grid = build_grid(1, 2.0, h)
    kernel = build_kernel(grid, s)
    D = np.abs(grid.axis) < 0.5
    times = np.round(np.arange(0.4, 1.6 + 1e-9, 0.02), 12)
    ubar = bar.FieldSeries.steady(Field(grid, np.ones(grid.size)), times)
    cut = bar.CutoffPair(delta, (xbar,), eps_o)
    full = bar.strongmax_sub_build(ubar, D, (xbar,), delta, None, cut, kernel)
    half = bar.strongmax_sub_build(ubar, D, (xbar,), delta, full.eps_admissible / 2, cut, kernel)
    zero = bar.strongmax_sub_build(ubar, D, (xbar,), delta, 0.0, cut, kernel)
    return full, half, zero
