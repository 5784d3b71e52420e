import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resolvent_lab import (
    Grid,
    ResolventMap,
    admissible_radius,
    extension_radius,
    herglotz_generator,
    koebe_generator,
    linear_generator,
    omega_generator,
    resolvent_grid,
    resolvent_on_circle,
    solve_many,
    solve_resolvent,
)
from resolvent_lab.errors import BelowThreshold, NoConvergence, OutsideDomain
from resolvent_lab.verifier import sample_generator

import oracles
from conftest import random_disk_points


def test_linear_example():
    v = solve_resolvent(linear_generator(1.0), 2.0, 0.6)
    assert v.w == pytest.approx(0.2, abs=1e-15)
    assert v.deriv == pytest.approx(1 / 3, abs=1e-15)
    assert v.residual <= 1e-15


def test_koebe_r1_example():
    assert solve_resolvent(koebe_generator(), 1.0, 0.5).w == pytest.approx(0.2, abs=1e-15)


def test_koebe_r3_example():
    w = solve_resolvent(koebe_generator(), 3.0, 0.5).w
    assert w == pytest.approx(oracles.koebe_resolvent(3, 0.5), abs=1e-15)
    assert w == pytest.approx(0.1061072, abs=1e-7)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0, 10.0])
def test_koebe_matches_quadratic_oracle(r, rng):
    z = random_disk_points(rng, 60)
    field = solve_many(koebe_generator(), r, z)
    exact = np.array([oracles.koebe_resolvent(r, zz) for zz in z])
    assert np.max(np.abs(field.w - exact)) <= 1e-10


def test_linear_field_everywhere():
    q = 1.5 - 0.5j
    grid = Grid(16, 64, 0.999)
    field = resolvent_grid(linear_generator(q), 4.0, grid)
    assert np.max(np.abs(field.w - grid.points() / (1 + 4.0 * q))) <= 1e-15


def test_koebe_grid_r1():
    grid = Grid(8, 8, 0.9)
    field = resolvent_grid(koebe_generator(), 1.0, grid)
    z = grid.points()
    assert np.max(np.abs(field.w - z / (2 + z))) <= 1e-10


def test_extended_grid_x10():
    gen = koebe_generator()
    bound = extension_radius(10.0) - 1e-6
    field = resolvent_grid(gen, 10.0, Grid(64, 256, bound))
    assert np.max(field.residual) <= 1e-12
    assert np.max(np.abs(field.w)) <= math.sqrt(20 / 9) - 1 + 1e-8


def test_grid_order_is_radius_then_angle():
    grid = Grid(3, 5, 0.5)
    field = resolvent_grid(koebe_generator(), 2.0, grid)
    assert field.z.shape == (3, 5)
    assert field.z[1, 2] == pytest.approx(grid.radii[1] * cmath.exp(2j * math.pi * 2 / 5))
    assert len(field) == 15 and len(list(field)) == 15


def test_extension_radius_values():
    assert extension_radius(2 + 1e-12) == pytest.approx(1.0, abs=1e-5)
    assert extension_radius(8.0) == pytest.approx((4 - math.sqrt(7)) ** 2, rel=1e-15)
    assert extension_radius(10.0) == pytest.approx(2.1671843, abs=1e-7)
    with pytest.raises(BelowThreshold):
        extension_radius(2.0)


@given(st.floats(2.001, 1e4), st.floats(0.001, 10))
def test_extension_radius_increasing(x, dx):
    assert extension_radius(x + dx) > extension_radius(x) > 1.0


def test_domain_errors():
    gen = koebe_generator()
    with pytest.raises(OutsideDomain):
        solve_resolvent(gen, 1.0, 1.0)
    with pytest.raises(OutsideDomain):
        solve_resolvent(gen, 10.0, 2.2)
    with pytest.raises(OutsideDomain):
        solve_many(gen, 10.0, [0.1, 2.2 + 0.1j])
    with pytest.raises(ValueError):
        solve_resolvent(gen, 0.0, 0.1)
    # beyond the unit disk but inside D_rho is fine
    assert abs(solve_resolvent(gen, 10.0, 2.0).w) < 1
    assert admissible_radius(gen, 1.0) == 1.0


def test_no_convergence_carries_node():
    exc = NoConvergence("x", z=0.5, node=3)
    assert exc.node == 3 and exc.z == 0.5


def test_resolvent_map_callable():
    G = ResolventMap(koebe_generator(), 1.0)
    w, d = G(0.5)
    assert w == pytest.approx(0.2) and d == pytest.approx(2 / 2.5**2)
    w, d = G(np.array([[0.5, -0.5]]))
    assert w.shape == (1, 2)


def test_on_circle():
    z, w = resolvent_on_circle(koebe_generator(), 1.0, 0.9, 64)
    assert np.allclose(np.abs(z), 0.9)
    assert np.max(np.abs(w - z / (2 + z))) <= 1e-12


# -- invariants over random generators --

generators = st.builds(
    lambda seed, n, qi: sample_generator(seed, n, complex(1.0, qi)),
    st.integers(0, 10**6), st.integers(1, 5), st.floats(-2, 2),
)


@given(generators, st.floats(0.05, 50), st.integers(0, 2**32 - 1))
def test_residual_selfmap_chain_rule(gen, r, seed):
    z = random_disk_points(np.random.default_rng(seed), 50)
    field = solve_many(gen, r, z)
    fw, dfw = gen.f(field.w)
    assert np.all(field.residual <= 1e-12 * (1 + np.abs(z)))
    assert np.all(np.abs(field.w) < 1)
    assert np.all(np.abs(field.deriv * (1 + r * dfw) - 1) <= 1e-12)


@given(generators, st.floats(2.01, 100), st.integers(0, 2**32 - 1))
def test_shrink_bound(gen, r, seed):
    x = r * gen.q.real
    z = random_disk_points(np.random.default_rng(seed), 200)
    assert np.max(np.abs(solve_many(gen, r, z).w)) <= 3 / (1 + x) + 1e-8


@given(generators, st.floats(0.05, 50), st.complex_numbers(max_magnitude=0.99))
def test_midpoint_restart_consistency(gen, r, z):
    direct = solve_resolvent(gen, r, z).w
    mid = solve_resolvent(gen, r, z / 2)
    restarted = solve_resolvent(gen, r, z, start=(z / 2, mid.w)).w
    assert abs(direct - restarted) <= 1e-10


@given(generators, st.floats(0.05, 50), st.floats(-4, 4), st.complex_numbers(max_magnitude=0.99))
def test_rotation_equivariance(gen, r, theta, z):
    rot = cmath.exp(1j * theta)
    lhs = solve_resolvent(gen.rotated(theta), r, z).w
    rhs = rot.conjugate() * solve_resolvent(gen, r, rot * z).w
    assert abs(lhs - rhs) <= 1e-12


def test_scalar_and_batch_agree(rng):
    gen = omega_generator(1 + 0.5j, 0.9j, 3)
    z = random_disk_points(rng, 40)
    batch = solve_many(gen, 5.0, z).w
    scalar = np.array([solve_resolvent(gen, 5.0, zz).w for zz in z])
    assert np.max(np.abs(batch - scalar)) <= 1e-12


def test_extended_domain_herglotz():
    gen = herglotz_generator([(0.3, 0.6), (2.5, 0.4)], 0.7)
    r = 8.0
    bound = admissible_radius(gen, r)
    z = bound * np.exp(2j * math.pi * np.arange(32) / 32)
    field = solve_many(gen, r, z)
    fw = gen.f(field.w)[0]
    assert np.max(np.abs(field.w + r * fw - z)) <= 1e-12
    assert np.max(np.abs(field.w)) <= math.sqrt(2 * 8 / 7) - 1 + 1e-8
