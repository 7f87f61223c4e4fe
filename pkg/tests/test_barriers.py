from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from movplane_lab import barriers as bar
from movplane_lab.experiments import strongmax_configuration
from movplane_lab.fraclap import Field, build_kernel
from movplane_lab import fraclap
from movplane_lab.grid import build_grid


@pytest.fixture(scope="module")
def mb():
    g = build_grid(1, 8.0, 1 / 16)
    return bar.manufactured_barrier(build_kernel(g, 0.5))


def test_manufactured_constants(mb):
    log = mb.log
    assert log["mu"] == 0.125 and log["rho1"] == 2.4375 and log["delta0"] == 0.21875 and log["rho2"] == 3.25
    assert log["c0"] == pytest.approx(0.07067, rel=1e-3)
    assert log["tau"] == pytest.approx(0.023545, rel=1e-3)
    assert log["eps_n"] == pytest.approx(0.014948, rel=1e-3)
    assert mb.spec.problems() == []


def test_zeta_residual_pass(mb):
    zeta = bar.zeta_build(mb.w_mu, mb.spec)
    res = bar.residual_L_lambda(zeta, mb.c_lambda, mb.kernel, mb.spec)
    assert res.status == "PASS" and res.max_residual < 0


def test_zeta_at_tn(mb):
    spec = mb.spec
    zeta = bar.zeta_build(mb.w_mu, spec)
    wt = fraclap.w_tilde_modify(mb.w_mu.field(0), spec.mu).flat
    assert np.allclose(zeta.values[0], wt - spec.tau * spec.step(mb.grid))
    # antisymmetric about T_0 except at the plane-adjacent step jump
    v = zeta.values[-1]
    inner = np.abs(mb.grid.axis) < mb.grid.radius - 2 * spec.mu
    assert np.allclose(v[inner], -v[inner][::-1])


@given(dt=st.floats(-5, 5))
def test_time_shift_commutes(mb, dt):
    spec = mb.spec
    moved = replace(spec, t_n=spec.t_n + dt, T_n=spec.T_n + dt)
    z0 = bar.zeta_build(mb.w_mu, spec)
    z1 = bar.zeta_build(mb.w_mu.shifted(dt), moved)
    assert np.allclose(z0.values, z1.values, rtol=1e-12, atol=1e-15)
    p0 = bar.psi_sub_build(z0, spec)
    p1 = bar.psi_sub_build(z1, moved)
    assert np.allclose(p0.psi.values, p1.psi.values, rtol=1e-12, atol=1e-15)


def test_theta_above_sigma_is_not_applicable(mb):
    spec = replace(mb.spec, theta=20.0)
    res = bar.residual_L_lambda(bar.zeta_build(mb.w_mu, spec), mb.c_lambda, mb.kernel, spec)
    assert res.status == "NOT-APPLICABLE" and "theta" in res.hypothesis
    assert res.stats["max_outside_rho1"] > 0


def test_zero_zeta_gives_zero_residual(mb):
    spec = replace(mb.spec, tau=0.0)
    zero = bar.FieldSeries(mb.grid, mb.w_mu.times, np.zeros_like(mb.w_mu.values))
    res = bar.residual_L_lambda(bar.zeta_build(zero, spec), mb.c_lambda, mb.kernel, spec)
    assert res.max_residual == 0.0 and res.status == "NOT-APPLICABLE"


def test_psi_checks(mb):
    zeta = bar.zeta_build(mb.w_mu, mb.spec)
    rep = bar.psi_sub_build(zeta, mb.spec, w_lambda=mb.w_lambda)
    assert (rep.initial_status, rep.exterior_status, rep.estimate_ii_status) == ("PASS", "PASS", "PASS")
    D = mb.spec.D(mb.grid)
    assert np.max(np.abs(rep.psi.values[0][D])) == pytest.approx(mb.spec.q)
    assert bar.psi_sub_build(zeta, mb.spec).status == "NOT-APPLICABLE"


def test_global_lower_bound(mb):
    rep = bar.global_lower_bound_check(mb.w_lambda, mb.spec)
    # the negative dip is partly lifted by the faded positive ramp
    assert rep.status == "PASS" and -mb.spec.eps_n <= rep.inf_at_tn < 0
    pos = bar.FieldSeries(mb.grid, mb.w_lambda.times, np.abs(mb.w_lambda.values))
    rep = bar.global_lower_bound_check(pos, mb.spec)
    assert rep.status == "PASS" and rep.min_margin >= 0


def test_boundary_subsolution(mb):
    spec = mb.spec
    D0 = spec.D0(mb.grid)
    rep = bar.boundary_sub_check(mb.w_lambda, D0, mb.xbar, mb.delta, spec, mb.kernel, c_lambda=mb.c_lambda)
    assert rep.status == "PASS" and rep.conclusion_bound > 0
    big = replace(spec, eps_n=spec.q)
    assert bar.boundary_sub_check(mb.w_lambda, D0, mb.xbar, mb.delta, big, mb.kernel,
                                  c_lambda=mb.c_lambda).status == "NOT-APPLICABLE"
    empty = np.zeros(mb.grid.size, dtype=bool)
    assert bar.boundary_sub_check(mb.w_lambda, empty, mb.xbar, mb.delta, spec, mb.kernel,
                                  c_lambda=mb.c_lambda).status == "NOT-APPLICABLE"


def test_boundary_sub_uses_shared_bump():
    assert bar.bump is fraclap.bump


def test_strongmax_configuration():
    full, half, zero = strongmax_configuration()
    assert full.status == "PASS" and full.eps_admissible == pytest.approx(0.019844, rel=1e-3)
    assert half.status == "PASS" and zero.status == "PASS"
    assert full.lower_bound > 0


def test_strongmax_far_point_shrinks_eps():
    g = build_grid(1, 2.0, 1 / 32)
    k = build_kernel(g, 0.5)
    D = np.abs(g.axis) < 0.5
    times = np.round(np.arange(0.4, 1.6 + 1e-9, 0.02), 12)
    ub = bar.FieldSeries.steady(Field(g, np.ones(g.size)), times)
    eps = []
    for xb in (0.8, 1.0, 1.5):
        cut = bar.CutoffPair(0.25, (xb,), 0.5)
        rep = bar.strongmax_sub_build(ub, D, (xb,), 0.25, None, cut, k)
        assert rep.status == "PASS"
        eps.append(rep.eps_admissible)
    assert eps[0] > eps[1] > eps[2] > 0
    cut = bar.CutoffPair(0.25, (0.5,), 0.5)
    with pytest.raises(ValueError):
        bar.strongmax_sub_build(ub, D, (0.5,), 0.25, None, cut, k)


@given(delta=st.floats(0.05, 1.0), eps_o=st.floats(0.05, 1.0))
def test_cutoff_plateau_and_support(delta, eps_o):
    cut = bar.CutoffPair(delta, (0.3,), eps_o, t_c=1.0)
    x = np.linspace(-3, 3, 2001)
    z = cut.zeta_x([x])
    r = np.abs(x - 0.3)
    assert np.all((z >= 0) & (z <= 1))
    assert np.all(z[r <= delta / 2] == 1.0)
    assert np.all(z[r >= delta] == 0.0)
    t = np.linspace(-2, 4, 2001)
    e = cut.eta_t(t)
    assert np.all(e[np.abs(t - 1) <= eps_o / 2] == 1.0)
    assert np.all(e[np.abs(t - 1) >= eps_o] == 0.0)


def test_cutoff_derivative_matches_difference():
    cut = bar.CutoffPair(0.5, (0.0,), 0.6)
    t = np.linspace(0.3, 1.7, 1401)
    num = np.gradient(cut.eta_t(t), t)
    assert np.allclose(cut.eta_dt(t)[5:-5], num[5:-5], atol=2e-3)


def test_spec_problems_and_structure(mb):
    assert replace(mb.spec, rho2=1.0).problems()
    assert replace(mb.spec, T_n=-1.0).problems()
    with pytest.raises(bar.BarrierSpecError):
        replace(mb.spec, mu=-0.5).check_structure(mb.grid)


def test_field_series_validation():
    g = build_grid(1, 1.0, 0.25)
    with pytest.raises(ValueError):
        bar.FieldSeries(g, [0.0, 0.0], np.zeros((2, g.size)))
    with pytest.raises(ValueError):
        bar.FieldSeries(g, [0.0], np.zeros((1, 3)))
