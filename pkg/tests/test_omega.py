import numpy as np
import pytest

from movplane_lab.evolve import Trajectory, evolve, linear_decay
from movplane_lab.fraclap import Field, build_kernel
from movplane_lab.grid import build_grid
from movplane_lab.omega import liminf_check, omega_limit


@pytest.fixture
def g():
    return build_grid(1, 1.0, 1 / 8)


def test_stationary_converges(g):
    v = np.exp(-g.axis**2)
    tr = Trajectory.from_arrays(g, np.arange(6.0), np.tile(v, (6, 1)))
    est = omega_limit(tr)
    assert est.converged and est.cauchy_gap == 0.0
    assert np.array_equal(est.phi.values, v)
    assert est.t_converged == 2.0


def test_decay_converges_to_zero(g):
    k = build_kernel(g, 0.5)
    tr = evolve(Field(g, np.cos(np.pi * g.axis / 2)), linear_decay(), k, 30.0, 1.0)
    est = omega_limit(tr, 1e-6)
    assert est.converged and np.max(np.abs(est.phi.values)) < 1e-6
    # the sup-norm of the limit matches the last snapshot within tol
    assert abs(np.max(np.abs(est.phi.values)) - tr.sup_norms[-1]) <= 1e-6


def test_oscillation_is_not_converged(g):
    t = np.linspace(0, 20, 41)
    vals = np.sin(t)[:, None] * np.exp(-g.axis**2)[None, :]
    est = omega_limit(Trajectory.from_arrays(g, t, vals))
    assert est.status == "NonConverged" and np.isnan(est.t_converged)


def test_too_few_snapshots(g):
    with pytest.raises(ValueError):
        omega_limit(Trajectory.from_arrays(g, [0.0, 1.0], np.zeros((2, g.size))))


def test_idempotent_on_tail(g):
    t = np.arange(0.0, 40.0, 2.0)
    vals = (1 + np.exp(-t))[:, None] * np.exp(-g.axis**2)[None, :]
    tr = Trajectory.from_arrays(g, t, vals)
    est = omega_limit(tr, 1e-6)
    assert est.converged
    again = omega_limit(tr.tail(est.t_converged), 1e-6)
    assert again.converged and np.array_equal(again.phi.values, est.phi.values)


def test_liminf(g):
    t = np.arange(10.0)
    bump = np.exp(-g.axis**2)
    pos = Trajectory.from_arrays(g, t, (1 + np.exp(-t))[:, None] * bump)
    rep = liminf_check(pos, 0.5)
    assert rep.status == "PASS" and rep.hypothesis_met
    to_zero = Trajectory.from_arrays(g, t, np.exp(-3 * t)[:, None] * bump)
    rep = liminf_check(to_zero, 0.5)
    assert rep.status == "PASS" and not rep.hypothesis_met
    alt = Trajectory.from_arrays(g, t, np.where(t % 2 == 0, 1.0, 1e-9)[:, None] * bump)
    assert liminf_check(alt, 0.5).status == "FAIL"
