import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from movplane_lab.fraclap import (ExteriorSpec, Field, FracOrder, barrier_g_eval, bump, bump_constant_exact,
                                  bump_constant_quadrature, build_kernel, c_norm, frac_lap_apply,
                                  sign_check_A2, step_constant, step_oracle, w_tilde_modify)
from movplane_lab.grid import GridError, PlaneReflection, build_grid, reflection_map

# Closed forms of (-Delta)^s (1-x^2)_+^s in 1D: sqrt(pi)/2, 1, 3 sqrt(pi)/4.
BUMP_1D = {0.25: 0.8862269254527580, 0.5: 1.0, 0.75: 1.3293403881791355}
# Step constants in 1D: sqrt(2/pi), 2/pi, 1/sqrt(2 pi).
STEP_1D = {0.25: 0.7978845608028654, 0.5: 0.6366197723675814, 0.75: 0.3989422804014327}


@pytest.fixture(scope="module")
def k_half():
    return build_kernel(build_grid(1, 2.0, 1 / 64), 0.5)


def test_c_norm_examples():
    assert c_norm(1, 0.5) == pytest.approx(1 / math.pi, rel=1e-14)
    assert c_norm(2, 0.5) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        FracOrder(1.0)
    with pytest.raises(ValueError):
        FracOrder(0.0)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_bump_constants_match_frozen_values(s):
    assert bump_constant_exact(1, s) == pytest.approx(BUMP_1D[s], rel=1e-12)
    assert bump_constant_quadrature(s) == pytest.approx(BUMP_1D[s], rel=1e-9)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_step_constants_match_frozen_values(s):
    assert step_constant(s) == pytest.approx(STEP_1D[s], rel=1e-10)
    # independent route: C = C_{1,s} / s
    assert step_constant(s) == pytest.approx(c_norm(1, s) / s, rel=1e-10)
    assert step_oracle(s, 0.25) == pytest.approx(STEP_1D[s] * 0.25 ** (-2 * s), rel=1e-10)
    with pytest.raises(ValueError):
        step_oracle(s, 0.0)


def test_step_constant_reduces_in_2d():
    assert step_constant(0.5, dim=2) == pytest.approx(STEP_1D[0.5], rel=1e-8)


def test_kernel_invariants(k_half):
    assert np.allclose(k_half.W, k_half.W.T)
    assert np.all(k_half.W >= 0) and np.all(np.diag(k_half.W) == 0)
    assert np.all(k_half.tail > 0)
    x = k_half.grid.axis
    right = x > 0
    assert np.all(np.diff(k_half.tail[right]) > 0)
    assert np.allclose(k_half.diag, k_half.A.sum(1) + k_half.boundary)


def test_kernel_invariants_2d():
    k = build_kernel(build_grid(2, 1.0, 1 / 8), 0.5)
    assert np.allclose(k.W, k.W.T) and np.all(k.W >= 0) and np.all(k.tail > 0)
    t = k.tail.reshape(k.grid.shape)
    assert t[0, 0] > t[0, 8] > t[8, 8]
    assert np.allclose(t, t.T)


def test_constants(k_half):
    one = np.ones(k_half.grid.size)
    assert np.max(np.abs(k_half.apply(one, ext_value=1.0))) < 1e-10
    assert np.allclose(k_half.apply(one), k_half.boundary)
    # near-neighbour correction vanishes at s = 1/2, so the boundary term is the tail alone
    assert np.allclose(k_half.boundary, k_half.tail, rtol=1e-9)


def test_row_sum_closed_form():
    # In 1D every row integrates the kernel over |y - x| > h/2 exactly: 2C (h/2)^{-2s} / (2s).
    h = 1 / 64
    k = build_kernel(build_grid(1, 2.0, h), 0.5)
    expected = 2 * c_norm(1, 0.5) * (h / 2) ** -1.0 / 1.0 + 2 * k.near
    assert np.allclose(k.diag, expected, rtol=1e-9)
    assert k.max_row_sum == pytest.approx(81.48733086305108, rel=1e-9)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_bump_constancy_1d(s):
    g = build_grid(1, 2.0, 1 / 256)
    k = build_kernel(g, s)
    out = k.apply(bump(g.axis, s))
    inner = np.abs(g.axis) < 0.9
    vals = out[inner]
    assert (vals.max() - vals.min()) / vals.mean() <= 0.02
    assert vals.mean() == pytest.approx(BUMP_1D[s], rel=0.02)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_bump_constancy_2d(s):
    g = build_grid(2, 1.5, 1 / 16)
    k = build_kernel(g, s)
    out = k.apply(bump(g.mesh(), s).ravel())[g.in_ball(0.7).ravel()]
    assert (out.max() - out.min()) / out.mean() <= 0.02
    assert out.mean() == pytest.approx(bump_constant_exact(2, s), rel=0.02)


def test_bump_scaling():
    # (-Delta)^s (delta^2 - |x - c|^2)_+^s is the same constant for every delta and centre
    g = build_grid(1, 2.0, 1 / 256)
    k = build_kernel(g, 0.5)
    for delta, c in [(0.5, 0.0), (1.0, 0.25), (0.75, -0.5)]:
        out = k.apply(bump(g.axis, 0.5, delta, [c]))
        inner = np.abs(g.axis - c) < 0.9 * delta
        assert out[inner].mean() == pytest.approx(1.0, rel=0.02)


def test_self_convergence_gaussian():
    # node x = 0.02 lies on all three cell-centred lattices (refinement ratio 3)
    vals = []
    for h in (0.04, 0.04 / 3, 0.04 / 9):
        g = build_grid(1, 4.0, h)
        k = build_kernel(g, 0.5)
        vals.append(k.apply(np.exp(-g.axis**2))[g.axis_index(0.02)])
    d1, d2 = abs(vals[0] - vals[1]), abs(vals[1] - vals[2])
    assert math.log(d1 / d2) / math.log(3) >= 1.0


def test_poisson_normalisation():
    # (-Delta)^{1/2} P_t = -d_t P_t with P_t = t / (pi (t^2 + x^2)), checked away from the truncation edge
    g = build_grid(1, 16.0, 1 / 256)
    k = build_kernel(g, 0.5)
    x = g.axis
    P1 = 1 / (math.pi * (1 + x**2))
    dtP = (x**2 - 1) / (math.pi * (1 + x**2) ** 2)
    lhs = k.apply(P1)
    inner = np.abs(x) <= 8
    err = np.max(np.abs(lhs[inner] + dtP[inner])) / np.max(np.abs(dtP))
    assert err <= 0.02


@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**32 - 1))
def test_linearity(k_half, a, b, seed):
    r = np.random.default_rng(seed)
    u, v = r.normal(size=(2, k_half.grid.size))
    lhs = k_half.apply(a * u + b * v)
    rhs = a * k_half.apply(u) + b * k_half.apply(v)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@given(seed=st.integers(0, 2**32 - 1))
def test_reflection_equivariance(seed):
    g = build_grid(2, 1.0, 1 / 8)
    k = build_kernel(g, 0.4)
    u = np.random.default_rng(seed).normal(size=g.size)
    for axis in (0, 1):
        img = reflection_map(g, PlaneReflection(axis, 0.0))
        assert np.allclose(k.apply(u[img]), k.apply(u)[img], atol=1e-10)


def test_frac_lap_apply_checks_grid(k_half):
    other = build_grid(1, 1.0, 1 / 64)
    with pytest.raises(GridError):
        frac_lap_apply(k_half, Field(other, np.zeros(other.size)))
    f = frac_lap_apply(k_half, Field(k_half.grid, np.ones(k_half.grid.size), t=2.0))
    assert f.t == 2.0


def test_narrow_region_scaling():
    # the dip filling a slab of width l sees (-Delta)^s of order l^{-2s}, uniformly in l
    g = build_grid(1, 4.0, 1 / 64)
    k = build_kernel(g, 0.5)
    x = g.axis
    ratios = []
    for l in (0.25, 0.5, 1.0):
        w = np.where(x < 0, -bump(x, 1.0, l / 2, [-l / 2]), 0.0)
        w = w - w[::-1]
        i = int(np.argmin(np.abs(x + l / 2)))
        ratios.append(k.apply(w)[i] / w[i] * l)
    assert min(ratios) > 0
    assert max(ratios) / min(ratios) <= 1.05


def test_barrier_g_examples():
    plane = PlaneReflection(0, 0.0)
    assert float(barrier_g_eval(0.5, [1.0], plane, 0.5, np.array([1.0]))) == pytest.approx(0.5)
    assert float(barrier_g_eval(0.5, [1.0], plane, 0.5, np.array([-1.0]))) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        barrier_g_eval(0.5, [0.3], plane, 0.5, np.array([0.0]))


@given(xbar=st.floats(0.6, 1.4), delta=st.floats(0.1, 0.5), s=st.floats(0.1, 0.9),
       lam=st.sampled_from([0.0, 0.125, -0.25]))
def test_barrier_g_antisymmetric(xbar, delta, s, lam):
    plane = PlaneReflection(0, lam)
    xb = [xbar + lam]
    x = np.linspace(-3, 3, 97)
    g1 = barrier_g_eval(delta, xb, plane, s, x)
    g2 = barrier_g_eval(delta, xb, plane, s, 2 * lam - x)
    assert np.allclose(g1, -g2)


def test_barrier_g_fraclap_bounded():
    g = build_grid(1, 2.0, 1 / 128)
    k = build_kernel(g, 0.5)
    vals = barrier_g_eval(0.25, [1.0], PlaneReflection(0, 0.0), 0.5, g.axis)
    out = k.apply(vals)
    ball = np.abs(g.axis - 1.0) < 0.25
    assert np.max(np.abs(out[ball])) <= 2 * BUMP_1D[0.5]


def test_w_tilde_examples():
    g = build_grid(1, 2.0, 1 / 16)
    x = g.axis
    w = Field(g, np.tanh(x))
    assert np.array_equal(w_tilde_modify(w, 0.0).values, w.values)
    mu = 0.25
    wm = Field(g, np.tanh(x - mu) * np.exp(-((x - mu) ** 2)))
    wt = w_tilde_modify(wm, mu).values
    assert np.all(wt[(x > -mu) & (x < mu)] == 0)
    assert np.array_equal(wt[x > mu], wm.values[x > mu])
    with pytest.raises(ValueError):
        w_tilde_modify(wm, -0.25)
    with pytest.raises(GridError):
        w_tilde_modify(wm, 0.1)


@given(m=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_w_tilde_antisymmetric_about_zero(m, seed):
    g = build_grid(1, 2.0, 1 / 16)
    mu = m * g.h
    img = reflection_map(g, PlaneReflection(0, mu))
    r = np.random.default_rng(seed).normal(size=g.size)
    w = np.where(g.axis > mu, r, 0.0)
    ok = (g.axis > mu) & (img >= 0)
    w[img[ok]] = -w[ok]
    wt = w_tilde_modify(Field(g, w), mu).values
    # antisymmetric about 0 wherever the shifted copy stays inside the lattice
    inside = np.abs(g.axis) < g.radius - 2 * mu
    assert np.allclose(wt[inside], -wt[inside][::-1])


def test_sign_check_examples():
    g = build_grid(1, 2.0, 1 / 32)
    k = build_kernel(g, 0.5)
    x = g.axis
    mu = 0.5
    w = np.where(x < mu, -np.minimum(mu - x, 1.0) * np.exp(-0.1 * (x - mu) ** 2), 0.0)
    img = reflection_map(g, PlaneReflection(0, mu))
    ok = (x < mu) & (img >= 0)
    w[img[ok]] = -w[ok]
    res = sign_check_A2(Field(g, w), mu, k)
    assert res.status == "PASS" and res.max_difference < 0
    assert sign_check_A2(Field(g, np.zeros(g.size)), mu, k).status == "NOT-APPLICABLE"
    w_bad = w.copy()
    w_bad[0] = 1.0
    assert sign_check_A2(Field(g, w_bad), mu, k).status == "NOT-APPLICABLE"


def test_exterior_spec_validation():
    with pytest.raises(ValueError):
        ExteriorSpec("periodic")
