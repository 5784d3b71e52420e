"""Seeded random generators and the theorem-check suite.

Every check produces a :class:`VerificationReport` with a signed margin:
nonnegative (up to 1e-8) means the predicted inequality held on the samples.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np

from . import geometry as geo
from .errors import BadQ, ResolventLabError
from .grid import Grid
from .herglotz import Generator, herglotz_generator, koebe_generator, linear_generator, omega_generator
from .resolvent import ResolventMap, resolvent_grid, resolvent_on_circle, solve_many
from . import semigroup as sg

PASS_TOL = 1e-8
THREADS_ENV = "RESOLVENT_LAB_THREADS"


@dataclass
class VerificationReport:
    check_id: str
    parameters: dict
    margin: float
    passed: bool
    runtime_ms: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "seed": self.seed,
            "margin": self.margin,
            "pass": self.passed,
            "runtime_ms": self.runtime_ms,
            "parameters": self.parameters,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def payload(self) -> str:
        """Serialized report without the runtime, for determinism comparisons."""
        d = self.to_dict()
        d.pop("runtime_ms")
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(d["check_id"], d["parameters"], d["margin"], d["pass"], d["runtime_ms"], d["seed"])

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls.from_dict(json.loads(text))

    @property
    def informational(self) -> bool:
        return bool(self.parameters.get("informational", False))


def sample_generator(seed: int, n_atoms: int = 3, q: complex = 1.0) -> Generator:
    """Random Herglotz generator with ``p(0) = q``.

    Angles are i.i.d. uniform, masses a symmetric Dirichlet(1) draw scaled to
    ``Re q``; the imaginary constant is ``Im q``.
    """
    q = complex(q)
    if not q.real > 0.0:
        raise BadQ(f"Re q must be positive, got {q!r}")
    if n_atoms < 1:
        raise ValueError("n_atoms must be at least 1")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * math.pi, n_atoms)
    masses = rng.dirichlet(np.ones(n_atoms))
    # on the grid of multiples of ulp(Re q) every partial sum below Re q is exact, so p(0) == q bit for bit
    unit = math.ulp(q.real)
    masses = np.round(masses * q.real / unit) * unit
    masses[-1] = q.real - masses[:-1].sum()
    if masses[-1] < 0.0:  # a few ulps of rounding excess; take it from the largest atom
        masses[-1] = 0.0
        k = int(np.argmax(masses))
        masses[k] = 0.0
        masses[k] = q.real - masses.sum()
    return herglotz_generator(zip(angles.tolist(), masses.tolist()), q.imag)


# -- configuration ------------------------------------------------------------------


@dataclass
class SuiteConfig:
    checks: Optional[list] = None
    seeds: list = field(default_factory=lambda: list(range(1, 21)))
    x_values: list = field(default_factory=lambda: [2.5, 5.0, 8.0, 10.0, 50.0])
    containment_x: list = field(default_factory=lambda: [6.0, 8.0, 20.0, 100.0])
    q: complex = 1.0
    n_atoms: Optional[int] = None
    radius_count: int = 64
    angle_count: int = 256
    workers: Optional[int] = None

    def grid(self, max_radius: float = 0.999) -> Grid:
        return Grid(self.radius_count, self.angle_count, max_radius)

    def atoms_for(self, seed: int) -> int:
        # cycling through 1..5 atoms keeps the extremal single-atom case in every sweep
        return self.n_atoms if self.n_atoms is not None else 1 + (seed - 1) % 5

    def generator(self, seed: int) -> Generator:
        return sample_generator(seed, self.atoms_for(seed), self.q)


class SuiteError(ResolventLabError):
    def __init__(self, check_id: str, cause: BaseException):
        super().__init__(f"check {check_id!r} aborted: {cause!r}")
        self.check_id = check_id
        self.cause = cause


@dataclass(frozen=True)
class Check:
    func: Callable
    anchor: str
    scope: str  # "once", "seed", "seed_x"
    x_set: str = "x_values"
    x_filter: Callable[[float], bool] = lambda x: True
    informational: bool = False


CHECKS: dict = {}


def register(check_id, anchor, scope, x_set="x_values", x_filter=lambda x: True, informational=False):
    def deco(fn):
        CHECKS[check_id] = Check(fn, anchor, scope, x_set, x_filter, informational)
        return fn

    return deco


class _Context:
    """Per-run memo of expensive fields shared between checks."""

    def __init__(self, config: SuiteConfig):
        self.config = config
        self.distortion = lru_cache(maxsize=None)(self._distortion)
        self.shape = lru_cache(maxsize=None)(self._shape)

    def _distortion(self, seed, x):
        gen = self.config.generator(seed)
        return geo.check_distortion_covering(gen, x / gen.q.real, self.config.grid())

    def _shape(self, seed, x):
        gen = self.config.generator(seed)
        r = x / gen.q.real
        return geo.shape_ratio_field(gen, r, resolvent_grid(gen, r, self.config.grid()))


# -- checks -------------------------------------------------------------------------


@register("r0", "threshold r0: largest real root of A(x) = 1, approximately 5.92434", "once")
def _check_r0(ctx, seed, x):
    closed, bisected = geo.r0_closed_form(), geo.r0_bisection()
    margin = min(5e-5 - abs(closed - geo.R0_REFERENCE), 1e-10 - abs(closed - bisected),
                 1e-10 - abs(geo.amplitude_A(closed) - 1.0))
    return margin, {"r0": closed, "r0_bisection": bisected, "A_at_r0": geo.amplitude_A(closed)}


def _unit_class(ctx, seed, x):
    rep = geo.class_radii(1.0, 1.0)
    err = max(abs(rep.R - 0.5), abs(rep.R1 - 1.0), abs(rep.R2 - 1.0 / (2.0 + math.sqrt(3.0))))
    return 1e-12 - err, {"R": rep.R, "R1": rep.R1, "R2": rep.R2}


_UNIT_ANCHOR = "radii of the class with alpha = beta = 1: univalent on D_1/2, covers D_1/(2+sqrt3)"
register("example-3.2", _UNIT_ANCHOR, "once")(_unit_class)
register("unit-class-radii", _UNIT_ANCHOR, "once")(_unit_class)


@register("closed-form", "resolvent equation solved against closed forms for qz and z(1+z)/(1-z)", "seed")
def _check_closed_form(ctx, seed, x):
    rng = np.random.default_rng(seed)
    z = np.sqrt(rng.uniform(0, 1, 1000)) * 0.999 * np.exp(2j * math.pi * rng.uniform(0, 1, 1000))
    q = complex(1.0, rng.uniform(-1, 1))
    err = 0.0
    for r in (0.5, 1.0, 3.0, 10.0):
        w = solve_many(linear_generator(q), r, z).w
        err = max(err, float(np.max(np.abs(w - z / (1 + r * q)))))
        w = solve_many(koebe_generator(), r, z).w
        b = 1.0 + r + z
        exact = 2 * z / (b + np.sqrt(b * b + 4 * (r - 1) * z))  # rationalized root through 0
        err = max(err, float(np.max(np.abs(w - exact))))
    return 1e-10 - err, {"max_error": err, "q": [q.real, q.imag]}


@register("distortion", "|G_r| <= rho1 on the extension disk D_rho", "seed_x", x_filter=lambda x: x > 2)
def _check_distortion(ctx, seed, x):
    rep = ctx.distortion(seed, x)
    return rep.slack_rho1, {"sup": rep.sup_extended, "rho": rep.radii.rho, "rho1": rep.radii.rho1}


@register("shrink", "|G_r| <= 3/(1 + r Re q) on the unit disk", "seed_x", x_filter=lambda x: x > 2)
def _check_shrink(ctx, seed, x):
    rep = ctx.distortion(seed, x)
    return rep.slack_rho3, {"sup": rep.sup_disk, "rho3": rep.radii.rho3}


@register("covering", "G_r(D_rho) covers D_rho2 and G_r(D) covers D_rho4 (winding number 1)", "seed_x")
def _check_covering(ctx, seed, x):
    rep = ctx.distortion(seed, x)
    params = {"rho4": rep.radii.rho4, "winding_rho4": sorted(set(rep.covering_rho4.counts.tolist()))}
    margin = rep.covering_rho4.margin
    if rep.covering_rho2 is not None:
        params.update(rho2=rep.radii.rho2, rho2_general=rep.radii.rho2_general,
                      winding_rho2=sorted(set(rep.covering_rho2.counts.tolist())))
        margin = min(margin, rep.covering_rho2.margin)
    return margin, params


@register("containment", "w G_r'/G_r lies in the disk centred 1/(1-A^2) of radius A/(1-A^2)", "seed_x",
          x_set="containment_x", x_filter=lambda x: x > geo.R0)
def _check_containment(ctx, seed, x):
    A = geo.amplitude_A(x)
    S = ctx.shape(seed, x)
    margin = float(np.min(A / (1 - A * A) - np.abs(S - 1 / (1 - A * A))))
    return margin, {"A": A}


@register("order-half", "resolvents are starlike of order 1/2 for every r > 0", "seed_x", x_set="all_x")
def _check_order_half(ctx, seed, x):
    m = float(np.min(ctx.shape(seed, x).real))
    return m - 0.5, {"min_re_S": m}


@register("order-rem1", "starlike order exceeds x/(6+x) when x >= 6", "seed_x", x_set="all_x",
          x_filter=lambda x: x >= 6)
def _check_order_rem1(ctx, seed, x):
    m = float(np.min(ctx.shape(seed, x).real))
    return m - x / (6.0 + x), {"min_re_S": m, "bound": x / (6.0 + x)}


@register("orders-theory", "spirallike, starlike and strongly starlike orders from A(x)", "seed_x",
          x_set="all_x", x_filter=lambda x: x > geo.R0)
def _check_orders_theory(ctx, seed, x):
    S = ctx.shape(seed, x)
    grid = ctx.config.grid()
    thetas = [0.0]
    if x > 6:
        lim = math.acos(6.0 / x)
        thetas += [0.5 * lim, -0.5 * lim, lim, -lim]
    margin = math.inf
    params = {}
    for th in thetas:
        theory = geo.theoretical_orders(x, th)
        est = geo.orders_from_ratio(S, grid, th)
        m = est.starlike_order - theory.alpha_r
        m = min(m, theory.beta_r - est.strong_order)
        if theory.alpha_r_theta is not None:
            m = min(m, est.spirallike_order - theory.alpha_r_theta)
        margin = min(margin, m)
        if th == 0.0:
            params = {"alpha_r": theory.alpha_r, "beta_r": theory.beta_r, "starlike_est": est.starlike_order,
                      "strong_est": est.strong_order, "k_qc": theory.k_qc}
    return margin, params


@register("half-plane", "Re[((1+rq) G_r(z)/z)^(1/(1-gamma_r))] > 1/2", "seed_x", x_set="all_x",
          x_filter=lambda x: x >= 6)
def _check_half_plane(ctx, seed, x):
    gen = ctx.config.generator(seed)
    return geo.check_half_plane(gen, x / gen.q.real, ctx.config.grid()), {}


@register("exp-formula", "exponential formula: iterated resolvents converge to the flow", "once")
def _check_exp_formula(ctx, seed, x):
    gen = koebe_generator()
    rng = np.random.default_rng(2024)
    z = np.sqrt(rng.uniform(0, 1, 100)) * 0.9 * np.exp(2j * math.pi * rng.uniform(0, 1, 100))
    _, u = sg.flow_many(gen, 1.0, z)
    errs = [float(np.max(np.abs(sg.exponential_formula(gen, 1.0, z, n) - u[-1]))) for n in (16, 32, 64, 128, 256, 512)]
    mono = min(1.1 * a - b for a, b in zip(errs, errs[1:]))
    return min(1e-2 - errs[4], mono), {"errors": errs}


@register("squeeze-linear", "f = qz is exponentially squeezing with ratio Re q", "once")
def _check_squeeze_linear(ctx, seed, x):
    cert = sg.squeezing_margin(linear_generator(2.0), 1.0, sg.default_samples())
    return 1.0 + PASS_TOL - cert.worst_ratio, {"worst_ratio": cert.worst_ratio}


@register("squeeze-iff", "squeezing with ratio kappa iff Re p >= kappa", "seed")
def _check_squeeze_iff(ctx, seed, x):
    gen = ctx.config.generator(seed)
    grid = ctx.config.grid()
    z, rep = sg.re_p_field(gen, grid)
    min_re_p = float(np.min(rep))
    # passing side: Re p is harmonic, so its minimum over the sampled disk sits on the outer ring
    certified = sg.squeezing_margin(gen, 0.999 * min_re_p, sg.default_samples(t_max=100.0), grid)
    # failing side: start at the grid minimiser with kappa 0.1 above it
    k = np.unravel_index(np.argmin(rep), rep.shape)
    violated = sg.squeezing_margin(gen, min_re_p + 0.1, [(t, complex(z[k])) for t in np.linspace(1.0, 100.0, 100)])
    margin = min(1.0 + PASS_TOL - certified.worst_ratio, violated.worst_ratio - 1.0 - PASS_TOL)
    return margin, {"min_re_p": min_re_p, "certified_worst_ratio": certified.worst_ratio,
                    "violated_worst_ratio": violated.worst_ratio}


_RAY_CASES = ((1.0, 10.0), (complex(1.0, 0.5), 12.0))


def _ray_sources(seed):
    for q, r in _RAY_CASES:
        for gen in (linear_generator(q), koebe_like(q), sample_generator(seed, 3, q)):
            yield q, r, gen


def koebe_like(q: complex) -> Generator:
    return omega_generator(q, 1.0, 1)


@register("sector-rays", "G_r semigroup has no escape on rays inside |arg t - arg(1+rq)| < pi gamma_r/2", "once")
def _check_sector_rays(ctx, seed, x):
    margin, escaped = math.inf, []
    for q, r, gen in _ray_sources(1):
        for probe in (sg.probe_ray(ResolventMap(gen, r), a) for a in sg.sector_rays(r, q, -0.05)):
            margin = min(margin, probe.margin)
            escaped.append(probe.escaped)
    return margin, {"escaped": escaped, "cases": [[complex(q).real, complex(q).imag, r] for q, r in _RAY_CASES]}


@register("resolvent-semigroup", "semigroup of G_r: squeezing ratio kappa(r), sector rays, no boundary fixed point",
          "seed_x", x_set="all_x", x_filter=lambda x: x >= 6)
def _check_resolvent_semigroup(ctx, seed, x):
    gen = ctx.config.generator(seed)
    rep = sg.resolvent_semigroup_check(gen, x / gen.q.real)
    params = {"kappa": rep.kappa, "gamma_r": rep.gamma_r, "worst_ratio": rep.squeeze.worst_ratio,
              "ray_max_abs": [p.max_abs for p in rep.rays], "boundary_min_abs": rep.boundary_min_abs}
    return rep.margin, params


@register("sector-opening", "analyticity sector of the G_r semigroup contains |arg t - arg(1+rq)| < pi gamma_r/2",
          "seed_x", x_set="all_x", x_filter=lambda x: x >= 6)
def _check_sector_opening(ctx, seed, x):
    gen = ctx.config.generator(seed)
    r = x / gen.q.real
    gamma = geo.theoretical_orders(x).gamma_r
    centre = cmath.phase(1 + r * gen.q)
    alpha, beta = sg.sector_estimate(ResolventMap(gen, r), ctx.config.grid())
    margin = min(beta - (centre + math.pi * gamma / 2), alpha - (math.pi * gamma / 2 - centre),
                 gamma - (x - 6) / (x + 6))
    return margin, {"alpha_max": alpha, "beta_max": beta, "gamma_r": gamma}


@register("boundary-fixed", "G_r has no zeros near the circle, so its semigroup has no boundary fixed point",
          "seed_x", x_set="all_x")
def _check_boundary_fixed(ctx, seed, x):
    gen = ctx.config.generator(seed)
    _, w = resolvent_on_circle(gen, x / gen.q.real, 1.0 - 1e-3, 1024)
    m = float(np.min(np.abs(w)))
    return m, {"min_abs": m}


@register("uniform-convergence", "G_r semigroup at t = 3/kappa(r) is uniformly below e^-3", "seed_x",
          x_filter=lambda x: x >= 6)
def _check_uniform_convergence(ctx, seed, x):
    gen = ctx.config.generator(seed)
    r = x / gen.q.real
    kappa = sg.kappa_resolvent(r, gen.q)
    z = 0.999 * np.exp(2j * math.pi * np.arange(64) / 64)
    _, u = sg.flow_many(ResolventMap(gen, r), 3.0 / kappa, z)
    m = float(np.max(np.abs(u[-1])))
    return math.exp(-3.0) + 1e-6 - m, {"max_abs": m, "t": 3.0 / kappa}


@register("normalized-convergence", "(1+rq) G_r -> identity on compact subsets", "seed")
def _check_normalized(ctx, seed, x):
    gen = ctx.config.generator(seed)
    grid = Grid(ctx.config.radius_count, ctx.config.angle_count, 0.9)
    devs = [sg.normalized_deviation(gen, rr / gen.q.real, grid) for rr in (10.0, 1e2, 1e3, 1e4)]
    return min(a - b for a, b in zip(devs, devs[1:])), {"deviations": devs}


@register("semigroup-law", "u(t+s) = u(t, u(s))", "seed")
def _check_semigroup_law(ctx, seed, x):
    gen = ctx.config.generator(seed)
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(10):
        t, s = rng.uniform(0.05, 5.0, 2)
        z = np.sqrt(rng.uniform(0, 1)) * 0.9 * cmath.exp(2j * math.pi * rng.uniform())
        a = sg.flow(gen, t + s, z)
        b = sg.flow(gen, t, sg.flow(gen, s, z))
        err = max(err, abs(a - b))
    return 1e-8 - err, {"max_error": err}


@register("trivial-flow", "f = qz flows as e^{-qt} z on admissible rays", "once")
def _check_trivial_flow(ctx, seed, x):
    err = 0.0
    z = sg.default_starts(16)
    for q in (1.0, 2.0, complex(1.0, 0.5), complex(0.5, -1.0)):
        gen = linear_generator(q)
        limit = math.pi / 2 - abs(cmath.phase(q))
        for phi in (0.0, 0.9 * limit, -0.9 * limit):
            t = 10.0 * cmath.exp(1j * phi)
            _, u = sg.flow_many(gen, t, z, rtol=1e-12, atol=1e-14)
            err = max(err, float(np.max(np.abs(u[-1] - np.exp(-q * t) * z))))
    return 1e-10 - err, {"max_error": err}


# informational probes: reported, never part of the pass/fail status


@register("probe-beyond-sector", "rays 0.3 rad outside the guaranteed sector (no guarantee either way)", "once",
          informational=True)
def _probe_beyond(ctx, seed, x):
    margin, escaped = math.inf, []
    for q, r, gen in _ray_sources(1):
        for probe in (sg.probe_ray(ResolventMap(gen, r), a) for a in sg.sector_rays(r, q, 0.3)):
            margin = min(margin, probe.margin)
            escaped.append(probe.escaped)
    return margin, {"escaped": escaped}


@register("probe-conjecture", "sector analyticity of the G_r semigroup for small r (conjectural)", "seed",
          informational=True)
def _probe_conjecture(ctx, seed, x):
    gen = ctx.config.generator(seed)
    out, margin = {}, math.inf
    for xs in (0.1, 0.2):
        A = geo.amplitude_A(xs)
        gamma = (1 - A) / (1 + A)
        r = xs / gen.q.real
        centre = cmath.phase(1 + r * gen.q)
        half = math.pi * gamma / 2 - 0.05
        probes = [sg.probe_ray(ResolventMap(gen, r), centre + s * half) for s in (-1, 1)]
        margin = min(margin, *(p.margin for p in probes))
        out[str(xs)] = [p.escaped for p in probes]
    return margin, {"escaped": out}


@register("probe-normalized-disk", "(1+rq) G_r -> identity on the whole disk (open question)", "seed",
          informational=True)
def _probe_normalized_disk(ctx, seed, x):
    gen = ctx.config.generator(seed)
    grid = Grid(ctx.config.radius_count, ctx.config.angle_count, 0.999)
    devs = [sg.normalized_deviation(gen, rr / gen.q.real, grid) for rr in (10.0, 1e2, 1e3, 1e4)]
    return min(a - b for a, b in zip(devs, devs[1:])), {"deviations": devs}


DEFAULT_CHECKS = [cid for cid, c in CHECKS.items() if not c.informational and cid != "unit-class-radii"]


# -- orchestration ------------------------------------------------------------------


def _x_values(config: SuiteConfig, check: Check) -> list:
    if check.x_set == "containment_x":
        xs = list(config.containment_x)
    elif check.x_set == "all_x":
        xs = sorted(set(config.x_values) | set(config.containment_x))
    else:
        xs = list(config.x_values)
    return [x for x in xs if check.x_filter(x)]


def _jobs(config: SuiteConfig):
    checks = config.checks if config.checks else DEFAULT_CHECKS
    for cid in checks:
        if cid not in CHECKS:
            raise KeyError(f"unknown check id {cid!r}; known: {sorted(CHECKS)}")
        check = CHECKS[cid]
        if check.scope == "once":
            yield cid, check, 0, None
        elif check.scope == "seed":
            for seed in config.seeds:
                yield cid, check, seed, None
        else:
            for seed in config.seeds:
                for x in _x_values(config, check):
                    yield cid, check, seed, x


def _run_one(ctx: _Context, job) -> VerificationReport:
    cid, check, seed, x = job
    start = time.perf_counter()
    params = {"anchor": check.anchor}
    if check.informational:
        params["informational"] = True
    if check.scope != "once":
        q = complex(ctx.config.q)
        params.update(q=[q.real, q.imag], n_atoms=ctx.config.atoms_for(seed))
    if x is not None:
        params.update(x=float(x), r=float(x) / complex(ctx.config.q).real)
    try:
        margin, extra = check.func(ctx, seed, x)
        params.update(extra)
    except ResolventLabError as exc:
        margin = -math.inf
        params["error"] = f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # infrastructure failure
        raise SuiteError(cid, exc) from exc
    margin = float(margin)
    runtime = int(round(1000 * (time.perf_counter() - start)))
    return VerificationReport(cid, params, margin, bool(margin >= -PASS_TOL), runtime, int(seed))


def worker_count(config: SuiteConfig) -> int:
    if config.workers is not None:
        return max(1, int(config.workers))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def run_suite(config: Optional[SuiteConfig] = None) -> list:
    """Run the configured checks; one report per (check, seed, x)."""
    config = config or SuiteConfig()
    ctx = _Context(config)
    jobs = list(_jobs(config))
    n = worker_count(config)
    if n == 1:
        reports = [_run_one(ctx, job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            reports = list(pool.map(lambda job: _run_one(ctx, job), jobs))
    return sorted(reports, key=lambda rep: (rep.check_id, rep.seed))


def all_passed(reports: Iterable[VerificationReport]) -> bool:
    return all(rep.passed for rep in reports if not rep.informational)


def margin_summary(reports: Iterable[VerificationReport]) -> dict:
    reports = [rep for rep in reports if not rep.informational]
    return {
        "reports": len(reports),
        "failed": sum(not rep.passed for rep in reports),
        "min_margin": min((rep.margin for rep in reports), default=math.inf),
    }


def write_jsonl(reports: Iterable[VerificationReport], handle) -> None:
    for rep in reports:
        handle.write(rep.to_json() + "\n")


def read_jsonl(handle) -> list:
    return [VerificationReport.from_json(line) for line in handle if line.strip()]


def write_csv_summary(reports: Iterable[VerificationReport], handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["check_id", "seed", "x", "margin", "pass"])
    for rep in reports:
        x = rep.parameters.get("x")
        writer.writerow([rep.check_id, rep.seed, "" if x is None else format(x, ".17g"),
                         format(rep.margin, ".17g"), str(rep.passed).lower()])
