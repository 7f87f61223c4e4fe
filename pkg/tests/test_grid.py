import numpy as np
import pytest
from hypothesis import given, strategies as st

from movplane_lab.grid import (GridError, OutOfLattice, PlaneReflection, build_grid, radial_average,
                               reflect_index, reflection_map, side_mask)


def test_lattice_examples():
    g = build_grid(1, 2.0, 0.5)
    assert np.allclose(g.axis, [-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75])
    g = build_grid(1, 1.0, 0.25)
    assert g.size == 8 and np.all(np.abs(g.axis) < 1)
    g2 = build_grid(2, 1.0, 0.125)
    assert g2.shape == (16, 16)
    pts = g2.points
    assert np.allclose(np.sort(pts[:, 0]), np.sort(-pts[:, 0]))


@pytest.mark.parametrize("args", [(1, 1.0, 0.3), (1, 1.0, 0.0), (1, 1.0, -0.1), (3, 1.0, 0.5),
                                  (1, 0.75, 0.5)])
def test_invalid_grids(args):
    with pytest.raises(GridError):
        build_grid(*args)


def test_reflect_index_examples():
    g = build_grid(1, 2.0, 0.5)
    i = g.axis_index(0.75)
    assert g.axis[reflect_index(g, PlaneReflection(0, 0.0), i)] == -0.75
    g = build_grid(1, 1.0, 0.25)
    i = g.axis_index(0.125)
    assert g.axis[reflect_index(g, PlaneReflection(0, 0.5), i)] == 0.875
    with pytest.raises(OutOfLattice):
        reflect_index(g, PlaneReflection(0, 0.5), g.axis_index(-0.875))
    with pytest.raises(GridError):
        reflection_map(g, PlaneReflection(0, 0.1))


def test_plane_reflection_is_involution():
    p = PlaneReflection(1, 0.3)
    x = np.array([0.2, -1.1])
    assert np.allclose(p.reflect(p.reflect(x)), x)
    assert np.allclose(p.reflect(x), [0.2, 1.7])


@given(dim=st.sampled_from([1, 2]), half=st.integers(2, 12), m=st.integers(-11, 11),
       axis=st.integers(0, 1))
def test_reflection_map_involution(dim, half, m, axis):
    g = build_grid(dim, 1.0, 1.0 / half)
    axis = axis % dim
    m = max(-half + 1, min(half - 1, m))
    plane = PlaneReflection(axis, m * g.h)
    img = reflection_map(g, plane)
    ok = img >= 0
    assert np.array_equal(img[img[ok]], np.flatnonzero(ok))
    pts = g.points
    assert np.allclose(pts[img[ok]], plane.reflect(pts[ok]))
    # reflection swaps the two half-spaces
    minus = side_mask(g, plane, "minus").ravel()
    plus = side_mask(g, plane, "plus").ravel()
    assert np.all(plus[img[ok & minus]])
    assert not np.any(minus & plus)


def test_radial_average_exact_shells():
    g = build_grid(2, 1.0, 1 / 16)
    v = np.exp(-g.norm2())
    # equal radii from different node pairs may differ in the last bit of |x|^2
    assert max(p[2] for p in radial_average(v, g)) <= 4 * np.finfo(float).eps
    g1 = build_grid(1, 1.0, 1 / 8)
    shells = radial_average(g1.axis, g1)
    assert np.allclose([p[2] for p in shells], [p[0] for p in shells])
    with pytest.raises(ValueError):
        radial_average(v, g, center=(2.0, 0.0))


def test_radial_average_off_center():
    g = build_grid(2, 1.0, 1 / 16)
    c = (0.25, -0.125)
    v = np.cos(np.sqrt(g.norm2(c)))
    assert max(p[2] for p in radial_average(v, g, c)) < 1e-15
