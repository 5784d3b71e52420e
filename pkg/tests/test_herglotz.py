import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resolvent_lab import (
    BoundaryAtom,
    Grid,
    eval_f,
    eval_p,
    generator_from_dict,
    generator_from_json,
    herglotz_generator,
    koebe_generator,
    linear_generator,
    make_herglotz,
    make_starlike_reference,
    omega_generator,
)
from resolvent_lab.errors import BadOrder, BadQ, EmptyMeasure, NegativeMass, NotProbability, OutsideDisk
from resolvent_lab.geometry import estimate_orders

from conftest import random_disk_points

angles = st.floats(-20.0, 20.0, allow_nan=False)
masses = st.floats(0.0, 5.0, allow_nan=False)
atom_lists = st.lists(st.tuples(angles, masses), min_size=1, max_size=6).filter(
    lambda a: math.fsum(m for _, m in a) > 1e-3
)


# -- construction examples --


def test_single_unit_atom_is_koebe_kernel():
    p = make_herglotz([(0.0, 1.0)])
    assert p.q == 1
    z = 0.3 - 0.2j
    assert p(z)[0] == pytest.approx((1 + z) / (1 - z), abs=1e-15)


def test_two_antipodal_atoms():
    p = make_herglotz([(0.0, 0.5), (math.pi, 0.5)])
    assert p.q == 1
    z = 0.4 + 0.1j
    assert p(z)[0] == pytest.approx((1 + z * z) / (1 - z * z), abs=1e-14)


def test_gamma_shifts_value_at_origin():
    assert make_herglotz([(0.0, 1.0)], gamma=-1.0).q == 1 - 1j


def test_angles_reduced_mod_two_pi():
    p = make_herglotz([(-0.5, 1.0), (7.0, 1.0)])
    assert all(0.0 <= a.angle < 2 * math.pi for a in p.atoms)
    assert p.atoms[0].angle == pytest.approx(2 * math.pi - 0.5)


@pytest.mark.parametrize("atoms, exc", [([], EmptyMeasure), ([(0.0, 0.0)], EmptyMeasure), ([(0.0, -1.0)], NegativeMass)])
def test_construction_errors(atoms, exc):
    with pytest.raises(exc):
        make_herglotz(atoms)


def test_boundary_atom_objects_accepted():
    p = make_herglotz([BoundaryAtom(0.0, 2.0)])
    assert p.q == 2


# -- evaluation examples --


def test_eval_p_single_atom():
    p = make_herglotz([(0.0, 1.0)])
    assert eval_p(p, 0) == (1, 2)
    v, d = eval_p(p, 0.5)
    assert v == pytest.approx(3, abs=1e-15) and d == pytest.approx(8, abs=1e-14)


def test_eval_p_two_atoms_on_imaginary_axis():
    p = make_herglotz([(0.0, 0.5), (math.pi, 0.5)])
    v, d = eval_p(p, 0.5j)
    z = 0.5j
    assert v == pytest.approx(0.6, abs=1e-15)
    assert d == pytest.approx(4 * z / (1 - z * z) ** 2, abs=1e-14)


@pytest.mark.parametrize("z", [1.0, 1.2j, -1.0 + 0.1j])
def test_eval_outside_disk(z):
    with pytest.raises(OutsideDisk):
        eval_p(make_herglotz([(0.0, 1.0)]), z)
    with pytest.raises(OutsideDisk):
        eval_f(koebe_generator(), z)


def test_eval_f_identity():
    gen = omega_generator(1.0, 0.0)
    assert eval_f(gen, 0.3 + 0.1j) == (0.3 + 0.1j, 1)


def test_eval_f_koebe():
    v, d = eval_f(koebe_generator(), 0.5)
    assert v == pytest.approx(1.5, abs=1e-15)
    assert d == pytest.approx(7.0, abs=1e-14)


def test_f_at_origin_and_derivative_is_q():
    for gen in (koebe_generator(), linear_generator(2 - 1j), herglotz_generator([(1.0, 0.3), (2.0, 0.7)], 0.4)):
        f0, df0 = eval_f(gen, 0.0)
        assert f0 == 0 and df0 == pytest.approx(gen.q, abs=1e-15)


def test_omega_validation():
    with pytest.raises(BadQ):
        omega_generator(-1.0, 0.5)
    with pytest.raises(ValueError):
        omega_generator(1.0, 1.5)
    with pytest.raises(ValueError):
        omega_generator(1.0, 0.5, 0)


# -- reference starlike maps --


def test_reference_half_order_is_koebe_like():
    h = make_starlike_reference(0.5, [(0.0, 1.0)])
    z = 0.3 + 0.4j
    v, d = h(z)
    assert v == pytest.approx(z / (1 - z), abs=1e-15)
    assert d == pytest.approx(1 / (1 - z) ** 2, abs=1e-14)


def test_reference_three_quarters():
    h = make_starlike_reference(0.75, [(0.0, 1.0)])
    assert h(0.5)[0] == pytest.approx(0.5 * math.sqrt(2), abs=1e-15)
    assert h(0.0) == (0, 1)


@pytest.mark.parametrize("order", [0.0, 1.0, -0.2, 1.5])
def test_reference_bad_order(order):
    with pytest.raises(BadOrder):
        make_starlike_reference(order, [(0.0, 1.0)])


def test_reference_not_probability():
    with pytest.raises(NotProbability):
        make_starlike_reference(0.5, [(0.0, 0.6), (1.0, 0.5)])
    make_starlike_reference(0.5, [(0.0, 0.6), (1.0, 0.4 + 5e-13)])


@given(st.floats(0.05, 0.95), st.lists(st.floats(0, 2 * math.pi), min_size=1, max_size=4))
def test_reference_map_order_on_grid(order, angs):
    h = make_starlike_reference(order, [(a, 1.0 / len(angs)) for a in angs])
    est = estimate_orders(h, Grid(16, 64, 0.99))
    assert est.starlike_order >= order - 1e-9


# -- JSON schema --


def test_json_round_trip():
    for gen in (koebe_generator(), omega_generator(1 + 0.5j, 0.3 - 0.2j, 3),
                herglotz_generator([(0.1, 0.25), (3.0, 0.75)], -0.5)):
        assert generator_from_json(gen.to_json()) == gen


def test_json_schema_examples():
    g = generator_from_dict({"form": "herglotz", "atoms": [{"angle": 0.0, "mass": 1.0}], "gamma": 0.0})
    assert g.q == 1
    g = generator_from_dict({"form": "omega", "q": {"re": 1.0, "im": 0.0}, "c": {"re": 1.0, "im": 0.0}, "m": 1})
    assert g == koebe_generator()
    with pytest.raises(ValueError):
        generator_from_dict({"form": "spline"})


# -- invariants --


@given(atom_lists, st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_positivity(atoms, gamma, seed):
    p = make_herglotz(atoms, gamma)
    z = random_disk_points(np.random.default_rng(seed), 10_000, 1 - 1e-3)
    assert np.all(p(z)[0].real > 0)


def _fd_check(fn, z, h=1e-6):
    v, d = fn(z)
    fd = (fn(z + h)[0] - fn(z - h)[0]) / (2 * h)
    return np.abs(d - fd) <= 1e-6 * (1 + np.abs(d))


def test_derivative_consistency(rng):
    z = random_disk_points(rng, 1000, 0.95)
    gens = [koebe_generator(), omega_generator(1 + 0.5j, 0.7j, 3), herglotz_generator([(1.0, 0.4), (4.0, 0.6)], 0.2)]
    for gen in gens:
        assert np.all(_fd_check(gen.p, z))
        assert np.all(_fd_check(gen.f, z))


@given(st.floats(0.1, 5.0))
def test_form_equivalence(q):
    a = omega_generator(q, 1.0, 1)
    b = herglotz_generator([(0.0, q)])
    z = Grid(32, 128, 0.99).points()
    assert np.max(np.abs(a.f(z)[0] - b.f(z)[0])) <= 1e-14 * np.max(np.abs(a.f(z)[0]))
    assert np.max(np.abs(a.p(z)[0] - b.p(z)[0])) <= 1e-14 * np.max(np.abs(a.p(z)[0]))


@given(st.floats(-4, 4), atom_lists, st.floats(-2, 2))
def test_rotation_equivariance(theta, atoms, gamma):
    z = Grid(8, 32, 0.9).points()
    rot = cmath.exp(1j * theta)
    for gen in (herglotz_generator(atoms, gamma), omega_generator(1 + 0.3j, 0.8 - 0.1j, 2)):
        g = gen.rotated(theta)
        direct = np.conj(rot) * gen.f(rot * z)[0]
        assert np.max(np.abs(g.f(z)[0] - direct)) <= 1e-14 * (1 + np.max(np.abs(direct)))
        assert np.all(g.p(z)[0].real >= 0)


def test_generator_real_part_nonnegative():
    z = Grid(64, 256, 0.999).points()
    for gen in (koebe_generator(), omega_generator(2 - 1j, -1.0, 4)):
        assert np.all((gen.f(z)[0] / z).real >= 0)
