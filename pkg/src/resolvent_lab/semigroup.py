"""Semigroup trajectories, the exponential formula and squeezing/sector checks.

A trajectory for complex time ``t = |t| e^{i phi}`` is computed along the
ray by integrating ``du/ds = -e^{i phi} F(u)`` for ``s`` in ``[0, |t|]``,
where ``F`` is either a generator ``f`` or a resolvent ``G_r`` (the latter
generates a semigroup of its own).
"""

from __future__ import annotations

import cmath
import csv
import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .errors import BelowThreshold, BranchAmbiguous, DomainEscape, OutsideDisk
from .geometry import theoretical_orders
from .grid import Grid
from .herglotz import Generator
from .ode import integrate
from .resolvent import ResolventMap, resolvent_grid, resolvent_on_circle, solve_many

ESCAPE_RADIUS = 1.0 - 1e-12
RTOL = 1e-10
ATOL = 1e-12
# squeezing ratios divide by e^{-kappa t}, so their flows use relative error control only
SQUEEZE_ATOL = 1e-300

Source = Union[Generator, ResolventMap]


def _vector_field(source: Source):
    if isinstance(source, Generator):
        return lambda u: source.f(u)[0]
    if isinstance(source, ResolventMap):
        return lambda u: solve_many(source.gen, source.r, u, source.tol).w
    raise TypeError(f"cannot flow {type(source).__name__}")


def _inside(u):
    return np.abs(u) < 1.0


def source_id(source: Source) -> str:
    if isinstance(source, ResolventMap):
        return f"G[r={source.r!r}]:{source_id(source.gen)}"
    return hashlib.sha1(source.to_json().encode()).hexdigest()[:12]


def flow_many(source: Source, t: complex, z, s_out=None, rtol: float = RTOL, atol: float = ATOL):
    """``u`` along the ray through ``t`` for a batch of starting points.

    Returns ``(s_out, u)`` with ``u[k]`` the batch state at ``s_out[k]``;
    ``s_out`` defaults to ``[|t|]``.
    """
    t = complex(t)
    length = abs(t)
    rotation = cmath.exp(1j * cmath.phase(t)) if length > 0 else 1.0
    F = _vector_field(source)
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise OutsideDisk("starting points must lie in the unit disk")
    return integrate(lambda u: -rotation * F(u), z, length, s_out, rtol, atol, _inside, ESCAPE_RADIUS)


def flow(source: Source, t: complex, z: complex, rtol: float = RTOL, atol: float = ATOL) -> complex:
    """``u(t, z)`` for real or complex ``t`` (complex ``t`` along its ray)."""
    if t == 0:
        return complex(z)
    _, u = flow_many(source, t, np.array([complex(z)]), None, rtol, atol)
    return complex(u[-1, 0])


@dataclass(frozen=True)
class Trajectory:
    ray_angle: float
    s: np.ndarray
    u: np.ndarray
    generator_id: str
    z: complex

    def write_csv(self, handle) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["s", "re_u", "im_u", "abs_u"])
        for s, u in zip(self.s, self.u):
            writer.writerow([format(float(s), ".17g"), format(u.real, ".17g"), format(u.imag, ".17g"),
                             format(abs(u), ".17g")])


def trajectory(source: Source, t: complex, z: complex, n_samples: int = 101) -> Trajectory:
    t = complex(t)
    s = np.linspace(0.0, abs(t), n_samples)
    _, u = flow_many(source, t, np.array([complex(z)]), s)
    return Trajectory(cmath.phase(t), s, u[:, 0], source_id(source), complex(z))


def exponential_formula(gen: Generator, t: float, z, n: int):
    """``n``-fold iterate of the resolvent with parameter ``t/n`` applied to ``z``."""
    if not t > 0 or n < 1:
        raise ValueError("need t > 0 and n >= 1")
    scalar = np.isscalar(z)
    w = np.atleast_1d(np.asarray(z, dtype=complex))
    r = t / n
    for _ in range(int(n)):
        w = solve_many(gen, r, w).w
    return complex(w[0]) if scalar else w


# -- squeezing ----------------------------------------------------------------------


@dataclass(frozen=True)
class SqueezeCertificate:
    kappa: float
    worst_ratio: float
    passed: bool
    min_re_p: Optional[float] = None
    worst_sample: Optional[tuple] = None

    @property
    def grid_certifies(self) -> Optional[bool]:
        """Whether the grid minimum of ``Re p`` is at least ``kappa``."""
        return None if self.min_re_p is None else self.min_re_p >= self.kappa

    @property
    def agreement(self) -> Optional[bool]:
        return None if self.min_re_p is None else self.grid_certifies == self.passed


def re_p_field(source: Source, grid: Grid) -> tuple:
    """``(nodes, Re p)`` with ``p = F(z)/z`` on the grid."""
    if isinstance(source, Generator):
        z = grid.points()
        return z, source.p(z)[0].real
    fld = resolvent_grid(source.gen, source.r, grid, source.tol)
    return fld.z, (fld.w / fld.z).real


def squeezing_margin(source: Source, kappa: float, samples: Iterable, grid: Optional[Grid] = None,
                     rtol: float = RTOL, atol: float = SQUEEZE_ATOL) -> SqueezeCertificate:
    """Worst ``|u(t,z)| e^{kappa t} / |z|`` over ``(t, z)`` samples, with the
    grid minimum of ``Re p`` as the independent side of the criterion."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    samples = [(float(t), complex(z)) for t, z in samples]
    if any(t <= 0 for t, _ in samples):
        raise ValueError("sample times must be positive")
    zs = sorted({z for _, z in samples}, key=lambda c: (c.real, c.imag))
    ts = sorted({t for t, _ in samples})
    s_out, u = flow_many(source, max(ts), np.array(zs), ts, rtol, atol)
    t_index = {t: i for i, t in enumerate(ts)}
    z_index = {z: i for i, z in enumerate(zs)}
    worst, worst_sample = -math.inf, None
    for t, z in samples:
        ratio = abs(u[t_index[t], z_index[z]]) * math.exp(kappa * t) / abs(z)
        if ratio > worst:
            worst, worst_sample = ratio, (t, z)
    min_re_p = None
    if grid is not None:
        min_re_p = float(np.min(re_p_field(source, grid)[1]))
    return SqueezeCertificate(float(kappa), float(worst), worst <= 1.0 + 1e-8, min_re_p, worst_sample)


def sector_estimate(source: Source, grid: Grid) -> tuple:
    """Outer bounds ``(alpha_max, beta_max)`` of the analyticity sector ``(-alpha, beta)``."""
    if isinstance(source, Generator):
        arg = np.angle(source.p(grid.points())[0])
    else:
        fld = resolvent_grid(source.gen, source.r, grid, source.tol)
        arg = np.angle(fld.w / fld.z)
    half = math.pi / 2
    alpha = min(max(half + float(np.min(arg)), 0.0), half)
    beta = min(max(half - float(np.max(arg)), 0.0), half)
    return alpha, beta


# -- semigroups generated by resolvents ---------------------------------------------


def kappa_resolvent(r: float, q: complex) -> float:
    """Squeezing ratio of the semigroup generated by ``G_r`` (requires ``r Re q >= 6``)."""
    q = complex(q)
    x = r * q.real
    if not x >= 6.0:
        raise BelowThreshold(f"squeezing ratio needs r Re q >= 6, got {x!r}")
    gamma = theoretical_orders(x).gamma_r
    b = 1.0 + r * q
    inner = (b ** (1.0 / gamma)).real
    if inner <= 0.0:
        raise BranchAmbiguous("principal power of 1 + rq has nonpositive real part")
    return inner**gamma / (2.0 ** (1.0 - gamma) * abs(b) ** 2)


def kappa_resolvent_real(r: float, q: float) -> float:
    """Simplified squeezing ratio for real ``q``."""
    x = r * float(q)
    gamma = theoretical_orders(x).gamma_r
    return 1.0 / (2.0 ** (1.0 - gamma) * (1.0 + x))


def sector_rays(r: float, q: complex, offset: float) -> tuple:
    """Ray angles ``arg(1+rq) -/+ (pi gamma_r / 2 + offset)``."""
    q = complex(q)
    gamma = theoretical_orders(r * q.real).gamma_r
    centre = cmath.phase(1.0 + r * q)
    half = math.pi * gamma / 2 + offset
    return centre - half, centre + half


def default_starts(count: int = 16, radii=(0.5, 0.9, 0.99)) -> np.ndarray:
    """Deterministic starting points spread over the disk on a golden-angle spiral."""
    k = np.arange(count)
    rad = np.asarray(radii)[k % len(radii)]
    return rad * np.exp(1j * k * math.pi * (3.0 - math.sqrt(5.0)))


def default_samples(n_z: int = 10, n_t: int = 10, t_max: float = 20.0) -> list:
    zs = default_starts(n_z, radii=(0.3, 0.7, 0.95, 0.999))
    ts = np.linspace(t_max / n_t, t_max, n_t)
    return [(float(t), complex(z)) for z in zs for t in ts]


@dataclass(frozen=True)
class RayProbe:
    angle: float
    length: float
    escaped: bool
    max_abs: float
    configuration_error: bool = False

    @property
    def margin(self) -> float:
        return ESCAPE_RADIUS - self.max_abs


def probe_ray(source: Source, angle: float, length: float = 10.0, starts=None, n_out: int = 51) -> RayProbe:
    """Flow the start points along the ray of direction ``angle`` and record escapes.

    The batch is integrated together; after an escape each start is rerun
    alone so that the surviving trajectories still contribute ``max_abs``.
    """
    starts = default_starts() if starts is None else np.asarray(starts, dtype=complex)
    t = length * cmath.exp(1j * angle)
    s_out = np.linspace(0.0, length, n_out)
    try:
        _, u = flow_many(source, t, starts, s_out)
        return RayProbe(float(angle), float(length), False, float(np.max(np.abs(u))))
    except DomainEscape:
        pass
    max_abs = 0.0
    escaped = config = False
    for z in starts:
        try:
            _, u = flow_many(source, t, np.array([z]), s_out)
            max_abs = max(max_abs, float(np.max(np.abs(u))))
        except DomainEscape as exc:
            escaped = True
            config = config or exc.configuration_error
            max_abs = max(max_abs, 1.0 if exc.u is None else float(np.max(np.abs(exc.u))))
    return RayProbe(float(angle), float(length), escaped, max_abs, config)


@dataclass
class ResolventSemigroupReport:
    r: float
    q: complex
    x: float
    gamma_r: float
    kappa: float
    kappa_real: Optional[float]
    squeeze: SqueezeCertificate
    rays: list = field(default_factory=list)
    boundary_min_abs: float = math.nan

    @property
    def margins(self) -> dict:
        out = {
            "squeeze": 1.0 + 1e-8 - self.squeeze.worst_ratio,
            "rays": min((p.margin for p in self.rays), default=math.inf),
            "boundary_fixed": self.boundary_min_abs,
        }
        if self.kappa_real is not None:
            out["kappa_cross_check"] = 1e-12 - abs(self.kappa - self.kappa_real)
        return out

    @property
    def margin(self) -> float:
        return min(self.margins.values())


def resolvent_semigroup_check(gen: Generator, r: float, samples=None, ray_length: float = 10.0,
                              ray_starts=None, grid: Optional[Grid] = None) -> ResolventSemigroupReport:
    """Squeezing, sector and boundary-fixed-point checks for the semigroup generated by ``G_r``."""
    q = gen.q
    x = r * q.real
    if not x >= 6.0:
        raise BelowThreshold(f"resolvent-semigroup bounds need r Re q >= 6, got {x!r}")
    gamma = theoretical_orders(x).gamma_r
    kappa = kappa_resolvent(r, q)
    k_real = kappa_resolvent_real(r, q.real) if q.imag == 0.0 else None
    G = ResolventMap(gen, r)
    samples = default_samples() if samples is None else samples
    squeeze = squeezing_margin(G, kappa, samples, grid)
    rays = [probe_ray(G, a, ray_length, ray_starts) for a in sector_rays(r, q, -0.05)]
    _, w = resolvent_on_circle(gen, r, 1.0 - 1e-3, 1024)
    return ResolventSemigroupReport(r=float(r), q=q, x=x, gamma_r=gamma, kappa=kappa, kappa_real=k_real,
                                    squeeze=squeeze, rays=rays, boundary_min_abs=float(np.min(np.abs(w))))


def normalized_deviation(gen: Generator, r: float, grid: Grid) -> float:
    """``max |(1 + rq) G_r(z) - z|`` over the grid nodes."""
    fld = resolvent_grid(gen, r, grid)
    return float(np.max(np.abs((1.0 + r * gen.q) * fld.w - fld.z)))


__all__ = [
    "ESCAPE_RADIUS", "Trajectory", "SqueezeCertificate", "RayProbe", "ResolventSemigroupReport",
    "flow", "flow_many", "trajectory", "exponential_formula", "squeezing_margin", "sector_estimate",
    "kappa_resolvent", "kappa_resolvent_real", "sector_rays", "probe_ray", "resolvent_semigroup_check",
    "normalized_deviation", "default_samples", "default_starts", "re_p_field",
]
