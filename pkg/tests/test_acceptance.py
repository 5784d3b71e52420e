"""Acceptance gate: one test per criterion, each reported as a PASS/FAIL line."""

import math

import numpy as np
import pytest

from resolvent_lab import Grid, koebe_generator, linear_generator, make_starlike_reference
from resolvent_lab import geometry as geo
from resolvent_lab import semigroup as sg
from resolvent_lab import verifier as vf
from resolvent_lab.resolvent import ResolventMap, solve_many

import oracles
from conftest import criterion, random_disk_points

SEEDS = list(range(1, 21))
X_SWEEP = [2.5, 5.0, 8.0, 10.0, 50.0]
CONTAINMENT_X = [6.0, 8.0, 20.0, 100.0]
TOL = 1e-8


def _suite(checks, **kw):
    cfg = vf.SuiteConfig(checks=checks, seeds=kw.pop("seeds", SEEDS), x_values=kw.pop("x_values", X_SWEEP),
                         containment_x=kw.pop("containment_x", CONTAINMENT_X), **kw)
    return vf.run_suite(cfg)


def _by(reports, check_id):
    return [r for r in reports if r.check_id == check_id]


def _worst(reports):
    return min(r.margin for r in reports)


@pytest.fixture(scope="module")
def distortion_reports():
    # one run so that the three criteria share the cached fields
    return _suite(["distortion", "shrink", "covering"])


@pytest.fixture(scope="module")
def order_reports():
    return _suite(["containment", "order-half", "order-rem1", "half-plane"], x_values=[0.1, 0.5, 1.0, 2.5, 5.0])


def test_c01_closed_form_resolvents():
    with criterion(1, "closed-form resolvent oracle, 1e3 points, r in {0.5,1,3,10}") as c:
        z = random_disk_points(np.random.default_rng(1), 1000)
        worst = 0.0
        for r in (0.5, 1.0, 3.0, 10.0):
            exact = np.array([oracles.koebe_resolvent(r, zz) for zz in z])
            worst = max(worst, float(np.max(np.abs(solve_many(koebe_generator(), r, z).w - exact))))
            for q in (1.0, 2 - 0.5j):
                worst = max(worst, float(np.max(np.abs(solve_many(linear_generator(q), r, z).w - z / (1 + r * q)))))
        reports = _suite(["closed-form"], seeds=[1, 2, 3])
        c.detail = f"max error {worst:.2e}, suite margin {_worst(reports):.2e}"
        assert worst <= 1e-10
        assert all(r.passed for r in reports)


def test_c02_r0():
    with criterion(2, "r0 reproduction") as c:
        r0 = geo.r0()
        c.detail = f"r0 = {r0!r}, |A(r0) - 1| = {abs(geo.amplitude_A(r0) - 1):.1e}"
        assert abs(r0 - 5.92434) <= 5e-5
        assert abs(geo.amplitude_A(r0) - 1) <= 1e-10
        assert r0 == pytest.approx(oracles.r0(), abs=1e-12)


def test_c03_unit_class_radii():
    with criterion(3, "class radii for alpha = beta = 1") as c:
        rep = geo.class_radii(1, 1)
        err = max(abs(rep.R - 0.5), abs(rep.R1 - 1), abs(rep.R2 - 1 / (2 + math.sqrt(3))))
        c.detail = f"max error {err:.1e}"
        assert err <= 1e-12


def test_c04_distortion(distortion_reports):
    with criterion(4, "sup |G_r| <= rho1 on D_rho, 20 seeds x 5 x") as c:
        reps = _by(distortion_reports, "distortion")
        c.detail = f"{len(reps)} reports, min slack {_worst(reps):.3e}"
        assert len(reps) == 20 * 5
        assert all(r.margin >= -TOL for r in reps)


def test_c05_shrink(distortion_reports):
    with criterion(5, "sup |G_r| <= 3/(1+x) on D_0.999") as c:
        reps = _by(distortion_reports, "shrink")
        c.detail = f"{len(reps)} reports, min slack {_worst(reps):.3e}"
        assert len(reps) == 20 * 5
        assert all(r.margin >= -TOL for r in reps)


def test_c06_covering(distortion_reports):
    with criterion(6, "winding number 1 about all probes at 0.99 rho2 and 0.99 rho4") as c:
        reps = _by(distortion_reports, "covering")
        c.detail = f"{len(reps)} reports, min probe clearance {_worst(reps):.3e}"
        assert len(reps) == 20 * 5
        for r in reps:
            assert r.parameters["winding_rho4"] == [1]
            assert r.parameters["winding_rho2"] == [1]
            assert r.margin > 0


def test_c07_containment_and_order_half(order_reports):
    with criterion(7, "disk containment (x > r0), Re S >= 1/2 for all x, Re S >= x/(6+x) for x >= 6") as c:
        cont = _by(order_reports, "containment")
        half = _by(order_reports, "order-half")
        rem = _by(order_reports, "order-rem1")
        c.detail = (f"containment {len(cont)} min {_worst(cont):.3e}; order 1/2 {len(half)} min {_worst(half):.3e}; "
                    f"x/(6+x) {len(rem)} min {_worst(rem):.3e}")
        assert len(cont) == 20 * 4
        assert {r.parameters["x"] for r in half} >= {0.1, 0.5, 1.0, 2.5, 5.0, 6.0, 8.0, 20.0, 100.0}
        assert all(r.margin >= -TOL for r in cont + half + rem)


def test_c08_order_calibration():
    with criterion(8, "order estimator calibration") as c:
        h = make_starlike_reference(0.5, [(0.0, 1.0)])  # z/(1-z)
        half_plane = geo.estimate_orders(h, Grid())
        g1 = geo.estimate_resolvent_orders(koebe_generator(), 1.0, Grid())
        c.detail = (f"z/(1-z) starlike {half_plane.starlike_order:.5f}; G1 starlike {g1.starlike_order:.5f}, "
                    f"strong {g1.strong_order:.5f}")
        assert abs(half_plane.starlike_order - 0.5) <= 1e-3
        assert abs(g1.starlike_order - 2 / 3) <= 1e-3
        assert abs(g1.strong_order - 1 / 3) <= 1e-3


def test_c09_exponential_formula():
    with criterion(9, "exponential formula, Koebe-type generator, t = 1") as c:
        gen = koebe_generator()
        z = random_disk_points(np.random.default_rng(9), 100, 0.9)
        _, u = sg.flow_many(gen, 1.0, z)
        ns = [16, 32, 64, 128, 256, 512]
        errs = [float(np.max(np.abs(sg.exponential_formula(gen, 1.0, z, n) - u[-1]))) for n in ns]
        c.detail = "errors " + ", ".join(f"{e:.2e}" for e in errs)
        assert errs[ns.index(256)] <= 1e-2
        assert all(b <= 1.1 * a for a, b in zip(errs, errs[1:]))
        (rep,) = _suite(["exp-formula"])
        assert rep.passed


def test_c10_squeezing_ratio():
    with criterion(10, "squeezing ratio kappa(10) and the G_10 semigroup estimate") as c:
        kappa = sg.kappa_resolvent(10.0, 1.0)
        real = sg.kappa_resolvent_real(10.0, 1.0)
        gamma = geo.theoretical_orders(10.0).gamma_r
        worst = -math.inf
        samples = sg.default_samples(10, 10, 20.0)
        zs = np.array(sorted({z for _, z in samples}, key=lambda w: (w.real, w.imag)))
        ts = np.array(sorted({t for t, _ in samples}))
        bound = np.abs(zs)[None, :] * np.exp(-kappa * ts)[:, None] + TOL
        for gen in (koebe_generator(), linear_generator(1.0), vf.sample_generator(1, 3, 1.0)):
            G = ResolventMap(gen, 10.0)
            _, u = sg.flow_many(G, ts[-1], zs, ts, atol=sg.SQUEEZE_ATOL)
            worst = max(worst, float(np.max(np.abs(u) - bound)))
            assert sg.squeezing_margin(G, kappa, samples).passed
        c.detail = f"kappa {kappa!r}, real-q form {real!r}, worst |u| - bound {worst:.3e}"
        assert len(samples) == 100
        assert kappa == pytest.approx(oracles.kappa(10, 1), rel=1e-13)
        assert abs(kappa - 1 / (2 ** (1 - gamma) * 11)) <= 1e-15
        assert abs(kappa - real) <= 1e-15
        # the quoted 0.0553480 is a rounding of the same formula (true value 0.05535023)
        assert abs(kappa - 0.0553480) <= 5e-6
        assert worst <= 0


def test_c11_sector_probes():
    with criterion(11, "no escape on rays arg(1+rq) +- (pi gamma/2 - 0.05), |t| <= 10") as c:
        (inside,) = _suite(["sector-rays"])
        (beyond,) = _suite(["probe-beyond-sector"])
        c.detail = (f"inside escapes {sum(inside.parameters['escaped'])}/{len(inside.parameters['escaped'])}; "
                    f"beyond-sector escapes (informational) {sum(beyond.parameters['escaped'])}"
                    f"/{len(beyond.parameters['escaped'])}")
        assert not any(inside.parameters["escaped"])
        assert inside.passed and beyond.informational


def test_c12_half_plane(order_reports):
    with criterion(12, "half-plane bound across the x >= 6 sweep") as c:
        reps = _by(order_reports, "half-plane")
        c.detail = f"{len(reps)} reports, min margin {_worst(reps):.3e}"
        assert {r.parameters["x"] for r in reps} == {6.0, 8.0, 20.0, 100.0}
        assert all(r.margin >= -TOL for r in reps)


def test_c13_semigroup_law_and_trivial_flow():
    with criterion(13, "semigroup law (1e-8) and trivial flow (1e-10)") as c:
        reps = _suite(["semigroup-law", "trivial-flow"])
        law, trivial = _by(reps, "semigroup-law"), _by(reps, "trivial-flow")
        c.detail = (f"law max error {max(r.parameters['max_error'] for r in law):.1e}, "
                    f"trivial max error {trivial[0].parameters['max_error']:.1e}")
        assert len(law) == 20 and all(r.passed for r in reps)
