"""Geometric quantities of resolvents: shape ratio, orders, radii and covering.

The shape ratio ``S(w) = w G_r'(w) / G_r(w)`` is always evaluated through
``p``:

    S(w) = (1 + r p(G)) / (1 + r (p(G) + G p'(G))),   G = G_r(w),

which has no removable singularity at the origin.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    BadClass,
    BelowThreshold,
    BranchAmbiguous,
    PoleOrNegative,
    ThetaOutOfRange,
    WindingAmbiguous,
)
from .grid import Grid
from .herglotz import Generator
from .resolvent import (
    DEFAULT_TOL,
    ResolventField,
    admissible_radius,
    extension_radius,
    resolvent_grid,
    resolvent_on_circle,
    solve_resolvent,
)

R0_REFERENCE = 5.92434
WINDING_MIN_DISTANCE = 1e-9
MAX_CURVE_POINTS = 2**18


def _shape_from_w(gen: Generator, r: float, G):
    p, dp = gen.p(G)
    return (1.0 + r * p) / (1.0 + r * (p + G * dp))


def shape_ratio(gen: Generator, r: float, w: complex, tol: float = DEFAULT_TOL) -> complex:
    """``w G_r'(w) / G_r(w)``; equals 1 at the origin."""
    if w == 0:
        return 1.0 + 0j
    G = solve_resolvent(gen, r, w, tol).w
    return complex(_shape_from_w(gen, r, G))


def shape_ratio_field(gen: Generator, r: float, field: ResolventField) -> np.ndarray:
    return _shape_from_w(gen, float(r), field.w)


# -- the amplitude A(x) and the threshold r0 -------------------------------------------


def amplitude_A(x: float, strict: bool = False) -> float:
    """``A(x) = 6x(1+x) / ((1+x)^3 - 3(5x-1))``.

    Outside the useful regime the value is still returned; with
    ``strict=True`` a nonpositive denominator or a value outside (0, 1)
    raises :class:`PoleOrNegative` instead.
    """
    x = float(x)
    den = (1.0 + x) ** 3 - 3.0 * (5.0 * x - 1.0)
    if den == 0.0:
        if strict:
            raise PoleOrNegative(f"A has a pole at x={x!r}")
        return math.inf
    value = 6.0 * x * (1.0 + x) / den
    if strict and (den < 0.0 or not 0.0 < value < 1.0):
        raise PoleOrNegative(f"A({x!r}) = {value!r} is outside (0, 1)")
    return value


def amplitude_flagged(x: float) -> bool:
    """True when ``A(x)`` is outside the regime where the bounds apply."""
    den = (1.0 + x) ** 3 - 3.0 * (5.0 * x - 1.0)
    return den <= 0.0 or not 0.0 < amplitude_A(x) < 1.0


def _cubic(x: float) -> float:
    # A(x) = 1  <=>  x^3 - 3x^2 - 18x + 4 = 0
    return ((x - 3.0) * x - 18.0) * x + 4.0


def r0_closed_form() -> float:
    return 1.0 + 2.0 * math.sqrt(7.0) * math.cos(math.atan(3.0 * math.sqrt(31.0) / 8.0) / 3.0)


def r0_bisection(lo: float = 5.0, hi: float = 7.0, tol: float = 1e-14) -> float:
    flo = _cubic(lo)
    if flo * _cubic(hi) > 0.0:
        raise ValueError("bracket does not contain a root")
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        fm = _cubic(mid)
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def r0() -> float:
    """Largest real root of ``A(x) = 1``, cross-checked by bisection."""
    closed = r0_closed_form()
    bisected = r0_bisection()
    if abs(closed - bisected) > 1e-10:
        raise ArithmeticError(f"closed form {closed!r} and bisection {bisected!r} disagree")
    return closed


R0 = r0()


@dataclass(frozen=True)
class TheoreticalOrders:
    x: float
    A: float
    alpha_r: float
    beta_r: float
    gamma_r: float
    k_qc: float
    theta: float = 0.0
    alpha_r_theta: Optional[float] = None


def theoretical_orders(x: float, theta: float = 0.0) -> TheoreticalOrders:
    """Starlike, strongly starlike, spirallike orders, squeezing exponent and dilatation bound."""
    x = float(x)
    if not x > R0:
        raise BelowThreshold(f"order bounds need r Re q > r0 = {R0:.6f}, got {x!r}")
    A = amplitude_A(x)
    alpha_theta = None
    if x > 6.0:
        if abs(theta) > math.acos(6.0 / x) + 1e-15:
            raise ThetaOutOfRange(f"|theta| must not exceed arccos(6/x) = {math.acos(6.0 / x)!r}")
        c = math.cos(theta)
        alpha_theta = (c - A) / ((1.0 - A * A) * c)
    return TheoreticalOrders(
        x=x,
        A=A,
        alpha_r=1.0 / (1.0 + A),
        beta_r=2.0 / math.pi * math.asin(A),
        gamma_r=(1.0 - A) / (1.0 + A),
        k_qc=A,
        theta=float(theta),
        alpha_r_theta=alpha_theta,
    )


# -- radii --------------------------------------------------------------------------


@dataclass(frozen=True)
class RadiiReport:
    M: Optional[float] = None
    R: Optional[float] = None
    R1: Optional[float] = None
    R2: Optional[float] = None
    rho: Optional[float] = None
    rho1: Optional[float] = None
    rho2: Optional[float] = None
    rho2_general: Optional[float] = None
    rho3: Optional[float] = None
    rho4: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def class_radii(alpha: complex, beta: complex) -> RadiiReport:
    """Univalence radius ``R`` and the distortion/covering radii ``R1 >= R2`` of the inverse class."""
    alpha, beta = complex(alpha), complex(beta)
    if not (alpha * beta.conjugate()).real > 0.0:
        raise BadClass(f"need Re(alpha conj(beta)) > 0, got alpha={alpha!r}, beta={beta!r}")
    ratio = (beta / alpha).real
    M = 1.0 - ratio
    if ratio > 0.75:
        R = abs(alpha) * (0.5 - M)
        R1 = 1.0
    else:
        R = abs(alpha) * (1.0 - math.sqrt(M)) ** 2
        R1 = 1.0 / math.sqrt(M) - 1.0
    disc = (R1 * abs(beta)) ** 2 - R * R
    R2 = R * R1 / (R1 * abs(beta) + math.sqrt(disc)) if disc >= 0.0 else math.nan
    return RadiiReport(M=M, R=R, R1=R1, R2=R2)


def rho4(r: float, q: complex) -> float:
    b = abs(1.0 + r * complex(q))
    return 1.0 / (b + math.sqrt(b * b - 1.0))


def resolvent_radii(r: float, q: complex) -> RadiiReport:
    """Extension, distortion and covering radii of ``G_r`` for ``q = f'(0)``.

    Entries other than ``rho4`` need ``r Re q > 2`` and are ``None`` below it.
    ``rho2`` is the closed-form covering radius; ``rho2_general`` is the covering
    radius of the general class specialised to resolvents (larger).
    """
    r, q = float(r), complex(q)
    if not q.real > 0.0:
        raise BadClass(f"Re q must be positive, got {q!r}")
    if not r > 0.0:
        raise ValueError(f"r must be positive, got {r!r}")
    x = r * q.real
    r4 = rho4(r, q)
    if not x > 2.0:
        return RadiiReport(rho4=r4)
    rho = extension_radius(x)
    rho1 = math.sqrt(2.0 * x / (x - 1.0)) - 1.0
    rho2 = rho / (abs(1.0 + r * q) + math.sqrt(2.0 + x + r * r * abs(q) ** 2))
    general = class_radii(2.0 * x, 1.0 + r * q)
    return RadiiReport(
        M=general.M, R=general.R, R1=general.R1, R2=general.R2,
        rho=rho, rho1=rho1, rho2=rho2, rho2_general=general.R2, rho3=3.0 / (1.0 + x), rho4=r4,
    )


# -- order estimation ---------------------------------------------------------------


@dataclass(frozen=True)
class OrderEstimate:
    starlike_order: float
    strong_order: float
    spirallike_order: float
    theta: float
    grid_used: Grid

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid_used"] = self.grid_used.to_dict()
        return d


def orders_from_ratio(S: np.ndarray, grid: Grid, theta: float = 0.0) -> OrderEstimate:
    """Grid infima/suprema of a field of ``z h'/h`` values."""
    S = np.asarray(S)
    return OrderEstimate(
        starlike_order=float(np.min(S.real)),
        strong_order=float(2.0 / math.pi * np.max(np.abs(np.angle(S)))),
        spirallike_order=float(np.min((np.exp(-1j * theta) * S).real) / math.cos(theta)),
        theta=float(theta),
        grid_used=grid,
    )


def estimate_orders(map_evaluator: Callable, grid: Grid, theta: float = 0.0) -> OrderEstimate:
    """Estimate orders of a normalized map from values ``(h, h')`` on the grid nodes."""
    z = grid.points()
    h, dh = map_evaluator(z)
    h = np.asarray(h)
    if np.any(h == 0):
        raise ZeroDivisionError("the map vanishes at a nonzero grid node")
    return orders_from_ratio(z * np.asarray(dh) / h, grid, theta)


def estimate_resolvent_orders(gen: Generator, r: float, grid: Grid, theta: float = 0.0) -> OrderEstimate:
    field = resolvent_grid(gen, r, grid)
    return orders_from_ratio(shape_ratio_field(gen, r, field), grid, theta)


# -- theorem checks -----------------------------------------------------------------


def _default_disk_grid(grid: Optional[Grid]) -> Grid:
    return grid if grid is not None else Grid(64, 256, 0.999)


def check_disk_containment(gen: Generator, r: float, grid: Optional[Grid] = None) -> float:
    """Minimum slack of ``S(w)`` inside the disk centred ``1/(1-A^2)`` of radius ``A/(1-A^2)``."""
    x = r * gen.q.real
    if not x > R0:
        raise BelowThreshold(f"containment needs r Re q > r0, got {x!r}")
    A = amplitude_A(x)
    centre = 1.0 / (1.0 - A * A)
    radius = A / (1.0 - A * A)
    S = shape_ratio_field(gen, r, resolvent_grid(gen, r, _default_disk_grid(grid)))
    return float(np.min(radius - np.abs(S - centre)))


def check_half_plane(gen: Generator, r: float, grid: Optional[Grid] = None) -> float:
    """Minimum of ``Re[((1+rq) G_r(z)/z)^(1/(1-gamma_r))] - 1/2`` over the grid."""
    q = gen.q
    x = r * q.real
    if not x >= 6.0:
        raise BelowThreshold(f"half-plane bound needs r Re q >= 6, got {x!r}")
    gamma = theoretical_orders(x).gamma_r
    field = resolvent_grid(gen, r, _default_disk_grid(grid))
    base = (1.0 + r * q) * field.w / field.z
    if np.any(base.real <= 0.0):
        raise BranchAmbiguous("normalized quotient has nonpositive real part; principal power undefined")
    return float(np.min((base ** (1.0 / (1.0 - gamma))).real) - 0.5)


def winding_numbers(curve: np.ndarray, probes: np.ndarray) -> np.ndarray:
    """Raw winding numbers of the closed polygon ``curve`` about each probe.

    Raises :class:`WindingAmbiguous` if the curve passes within 1e-9 of a
    probe.  Consecutive angle increments must stay below pi/2; callers refine
    the sampling otherwise (see :func:`image_winding`).
    """
    d = curve[None, :] - np.asarray(probes)[:, None]
    if np.min(np.abs(d)) < WINDING_MIN_DISTANCE:
        raise WindingAmbiguous("image curve passes too close to a probe point")
    inc = np.angle(np.roll(d, -1, axis=1) / d)
    return inc.sum(axis=1) / (2.0 * math.pi)


def _max_increment(curve, probes):
    d = curve[None, :] - np.asarray(probes)[:, None]
    return float(np.max(np.abs(np.angle(np.roll(d, -1, axis=1) / d))))


@dataclass(frozen=True)
class WindingResult:
    raw: np.ndarray
    counts: np.ndarray
    distance: np.ndarray
    n_points: int

    @property
    def margin(self) -> float:
        """Smallest probe clearance, negated for probes whose winding is not 1."""
        signed = np.where(self.counts == 1, self.distance, -self.distance)
        return float(np.min(signed))


def image_winding(curve_fn: Callable[[int], np.ndarray], probes: np.ndarray, n_points: int = 4096) -> WindingResult:
    """Winding numbers of the image curve ``curve_fn(n)`` about ``probes``,
    doubling ``n`` until every angle increment is below pi/2."""
    n = int(n_points)
    while True:
        curve = curve_fn(n)
        if _max_increment(curve, probes) <= math.pi / 2 or n >= MAX_CURVE_POINTS:
            break
        n *= 2
    raw = winding_numbers(curve, probes)
    counts = np.rint(raw).astype(int)
    distance = np.min(np.abs(curve[None, :] - np.asarray(probes)[:, None]), axis=1)
    return WindingResult(raw, counts, distance, n)


def probe_circle(radius: float, count: int = 64) -> np.ndarray:
    return radius * np.exp(2j * math.pi * (np.arange(count) + 0.5) / count)


@dataclass
class DistortionReport:
    x: float
    radii: RadiiReport
    sup_extended: Optional[float] = None
    sup_disk: Optional[float] = None
    slack_rho1: Optional[float] = None
    slack_rho3: Optional[float] = None
    covering_rho2: Optional[WindingResult] = None
    covering_rho4: Optional[WindingResult] = None
    margins: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return min(self.margins.values())

    def to_dict(self) -> dict:
        out = {"x": self.x, "radii": self.radii.to_dict(), "margins": dict(self.margins)}
        for name in ("sup_extended", "sup_disk", "slack_rho1", "slack_rho3"):
            out[name] = getattr(self, name)
        for name in ("covering_rho2", "covering_rho4"):
            wr = getattr(self, name)
            if wr is not None:
                out[name] = {"counts": wr.counts.tolist(), "n_points": wr.n_points, "margin": wr.margin}
        return out


def check_distortion_covering(gen: Generator, r: float, grid: Optional[Grid] = None,
                              n_curve: int = 4096, n_probes: int = 64) -> DistortionReport:
    """Distortion bounds (``rho1`` on the extension disk, ``rho3`` on the unit
    disk) and covering of the disks of radii ``0.99 rho2`` and ``0.99 rho4``.

    Only the grid's dimensions are used; the radii are set by the domains.
    """
    grid = _default_disk_grid(grid)
    q = gen.q
    x = r * q.real
    radii = resolvent_radii(r, q)
    report = DistortionReport(x=x, radii=radii)

    def image_curve(radius):
        return lambda n: resolvent_on_circle(gen, r, radius, n)[1]

    report.covering_rho4 = image_winding(image_curve(1.0 - 1e-3), probe_circle(0.99 * radii.rho4, n_probes), n_curve)
    report.margins["covering_rho4"] = report.covering_rho4.margin
    if x > 2.0:
        bound = admissible_radius(gen, r)
        ext = resolvent_grid(gen, r, grid.with_radius(bound))
        report.sup_extended = float(np.max(np.abs(ext.w)))
        report.slack_rho1 = radii.rho1 - report.sup_extended
        disk = resolvent_grid(gen, r, grid.with_radius(0.999))
        report.sup_disk = float(np.max(np.abs(disk.w)))
        report.slack_rho3 = radii.rho3 - report.sup_disk
        report.covering_rho2 = image_winding(
            image_curve((1.0 - 1e-3) * bound), probe_circle(0.99 * radii.rho2, n_probes), n_curve
        )
        report.margins.update(
            slack_rho1=report.slack_rho1, slack_rho3=report.slack_rho3, covering_rho2=report.covering_rho2.margin
        )
    return report
