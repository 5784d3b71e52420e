"""Pointwise solution of the resolvent equation ``w + r f(w) = z``.

The solution branch through ``w(0) = 0`` is selected by continuation along
the segment from 0 to ``z``; each continuation step is a damped Newton
iteration seeded by a first-order predictor.  Batches are handled by a
vectorized sweep and any node that fails there is re-solved by the scalar
adaptive continuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BelowThreshold, DomainEscape, NoConvergence, OutsideDomain
from .grid import Grid
from .herglotz import Generator

DEFAULT_TOL = 1e-12
MAX_NEWTON = 100
MAX_HALVINGS = 20
DOMAIN_MARGIN = 1e-6
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ResolventValue:
    w: complex
    deriv: complex
    residual: float
    iterations: int


def extension_radius(x: float) -> float:
    """Radius of the disk to which ``G_r`` extends when ``x = r Re q > 2``."""
    x = float(x)
    if not x > 2.0:
        raise BelowThreshold(f"extension radius needs r Re q > 2, got {x!r}")
    return (math.sqrt(2.0 * x) - math.sqrt(x - 1.0)) ** 2


def admissible_radius(gen: Generator, r: float) -> float:
    """Largest ``|z|`` the solver accepts (inclusive when above 1)."""
    x = r * gen.q.real
    if x > 2.0:
        return max(1.0, extension_radius(x) - DOMAIN_MARGIN)
    return 1.0


def _check_domain(gen: Generator, r: float, z) -> None:
    if not r > 0.0:
        raise ValueError(f"resolvent parameter must be positive, got {r!r}")
    bound = admissible_radius(gen, r)
    mod = float(np.max(np.abs(z))) if np.size(z) else 0.0
    if bound > 1.0:
        if mod > bound * (1.0 + 4 * _EPS):
            raise OutsideDomain(f"|z| = {mod!r} beyond the admissible radius {bound!r}")
    elif mod >= 1.0:
        raise OutsideDomain(f"|z| = {mod!r} is not inside the unit disk")


def _residual_floor(z, w, rf, tol):
    return np.maximum(tol, 16.0 * _EPS * (np.abs(z) + np.abs(w) + np.abs(rf)))


def _newton(gen: Generator, r: float, z: np.ndarray, w0: np.ndarray, tol: float, maxiter: int = MAX_NEWTON):
    """Damped Newton on ``F(w) = w + r f(w) - z`` for a batch of targets.

    Returns ``(w, converged, iterations)``.  Iterates are kept strictly
    inside the unit disk by step halving; a node that cannot make progress
    is marked as not converged.
    """
    w = np.array(w0, dtype=complex, copy=True)
    n = w.shape[0]
    converged = np.zeros(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    iterations = np.zeros(n, dtype=int)
    if n == 0:
        return w, converged, iterations
    if np.any(np.abs(w) >= 1.0):
        w = np.where(np.abs(w) >= 1.0, w / np.abs(w) * (1.0 - 1e-3), w)
    fw, dfw = gen.f(w)
    F = w + r * fw - z
    J = 1.0 + r * dfw
    for _ in range(maxiter):
        idx = np.nonzero(~(converged | failed))[0]
        if idx.size == 0:
            break
        wa, Fa, Ja, za = w[idx], F[idx], J[idx], z[idx]
        step = -Fa / Ja
        lam = np.ones(idx.size)
        floor = _residual_floor(za, wa, Fa + za - wa, tol)
        ok = np.zeros(idx.size, dtype=bool)
        wn = wa.copy()
        Fn = Fa.copy()
        Jn = Ja.copy()
        for _h in range(40):
            todo = ~ok
            cand = wa[todo] + lam[todo] * step[todo]
            inside = np.abs(cand) < 1.0
            safe = np.where(inside, cand, 0.0)
            fc, dfc = gen.f(safe)
            Fc = cand + r * fc - za[todo]
            good = inside & np.isfinite(Fc) & (np.abs(Fc) < np.abs(Fa[todo]) + floor[todo])
            sel = np.nonzero(todo)[0][good]
            wn[sel], Fn[sel], Jn[sel] = cand[good], Fc[good], 1.0 + r * dfc[good]
            ok[sel] = True
            if ok.all():
                break
            lam = np.where(ok, lam, 0.5 * lam)
        iterations[idx] += 1
        w[idx], F[idx], J[idx] = wn, Fn, Jn
        failed[idx[~ok]] = True
        res_ok = np.abs(Fn) <= _residual_floor(za, wn, Fn + za - wn, tol)
        step_ok = np.abs(lam * step) <= tol * (1.0 + np.abs(wn))
        converged[idx[ok & res_ok & step_ok]] = True
    return w, converged, iterations


def _finish(gen: Generator, r: float, z, w, iterations) -> ResolventValue:
    fw, dfw = gen.f(w)
    return ResolventValue(
        complex(w), complex(1.0 / (1.0 + r * dfw)), float(abs(w + r * fw - z)), int(iterations)
    )


def solve_resolvent(gen: Generator, r: float, z: complex, tol: float = DEFAULT_TOL, start=None) -> ResolventValue:
    """Solve ``w + r f(w) = z`` on the branch through ``w(0) = 0``.

    ``start`` optionally gives a known pair ``(z0, w0)`` on the branch to
    continue from instead of the origin.
    """
    r = float(r)
    z = complex(z)
    _check_domain(gen, r, z)
    q = gen.q
    if start is None:
        z0, w0, d0 = 0j, 0j, 1.0 / (1.0 + r * q)
    else:
        z0, w0 = complex(start[0]), complex(start[1])
        d0 = 1.0 / (1.0 + r * gen.f(w0)[1])
    if z == z0:
        return _finish(gen, r, z, w0, 0)

    s, h = 0.0, 1.0
    w_prev, d_prev = w0, d0
    total_iters = 0
    min_h = 2.0**-MAX_HALVINGS
    dz = z - z0
    while s < 1.0:
        h = min(h, 1.0 - s)
        s_new = 1.0 if s + h >= 1.0 else s + h
        z_new = z0 + s_new * dz
        pred = w_prev + d_prev * (s_new - s) * dz
        w, conv, its = _newton(gen, r, np.array([z_new]), np.array([pred]), tol)
        total_iters += int(its[0])
        if conv[0] and abs(w[0]) < 1.0:
            s = s_new
            w_prev = complex(w[0])
            d_prev = 1.0 / (1.0 + r * gen.f(w_prev)[1])
            h = 2.0 * h
            continue
        h = 0.5 * h
        if h < min_h:
            if not abs(w[0]) < 1.0:
                raise DomainEscape(f"Newton iterate left the unit disk while solving at z={z!r}", u=complex(w[0]))
            raise NoConvergence(f"continuation failed at z={z!r} after {MAX_HALVINGS} halvings", z=z)
    return _finish(gen, r, z, w_prev, total_iters)


@dataclass(frozen=True)
class ResolventField:
    """Resolvent values over a batch of nodes (arrays share the shape of ``z``)."""

    z: np.ndarray
    w: np.ndarray
    deriv: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray
    grid: Grid = None

    def value(self, index) -> ResolventValue:
        return ResolventValue(
            complex(self.w[index]), complex(self.deriv[index]), float(self.residual[index]), int(self.iterations[index])
        )

    def __iter__(self):
        for index in np.ndindex(self.z.shape):
            yield self.value(index)

    def __len__(self):
        return self.z.size


def _fallback(gen, r, z, w, iters, bad, tol, starts=None):
    for k in np.nonzero(bad)[0]:
        start = None if starts is None else starts[k]
        try:
            v = solve_resolvent(gen, r, z[k], tol, start=start)
        except NoConvergence as exc:
            exc.node = int(k)
            raise
        w[k] = v.w
        iters[k] += v.iterations


def solve_many(gen: Generator, r: float, z, tol: float = DEFAULT_TOL) -> ResolventField:
    """Vectorized ``solve_resolvent`` over an array of targets."""
    r = float(r)
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    _check_domain(gen, r, zf)
    q = gen.q
    w = np.zeros_like(zf)
    iters = np.zeros(zf.shape, dtype=int)
    inner = np.abs(zf) < 1.0
    if inner.any():
        # a target in the disk has exactly one preimage in the disk
        wi, conv, its = _newton(gen, r, zf[inner], zf[inner] / (1.0 + r * q), tol)
        w[inner], iters[inner] = wi, its
        bad = np.zeros(zf.shape, dtype=bool)
        bad[np.nonzero(inner)[0][~conv]] = True
        _fallback(gen, r, zf, w, iters, bad, tol)
    outer = ~inner
    if outer.any():
        for k in np.nonzero(outer)[0]:
            # continue from the point of modulus 0.9 on the same ray
            z_mid = zf[k] * (0.9 / abs(zf[k]))
            mid = solve_resolvent(gen, r, z_mid, tol)
            v = solve_resolvent(gen, r, zf[k], tol, start=(z_mid, mid.w))
            w[k], iters[k] = v.w, mid.iterations + v.iterations
    fw, dfw = gen.f(w)
    deriv = 1.0 / (1.0 + r * dfw)
    residual = np.abs(w + r * fw - zf)
    return ResolventField(zf.reshape(shape), w.reshape(shape), deriv.reshape(shape),
                          residual.reshape(shape), iters.reshape(shape))


def resolvent_grid(gen: Generator, r: float, grid: Grid, tol: float = DEFAULT_TOL) -> ResolventField:
    """Resolvent on every node of ``grid`` by radial continuation.

    Rows are radii (increasing), columns are angles; each ring is seeded by
    the first-order predictor from the previous ring.
    """
    r = float(r)
    _check_domain(gen, r, np.array([grid.max_radius]))
    q = gen.q
    pts = grid.points()
    nr, na = pts.shape
    w = np.empty_like(pts)
    deriv = np.empty_like(pts)
    iters = np.zeros(pts.shape, dtype=int)
    z_prev = np.zeros(na, dtype=complex)
    w_prev = np.zeros(na, dtype=complex)
    d_prev = np.full(na, 1.0 / (1.0 + r * q))
    for i in range(nr):
        zi = pts[i]
        pred = w_prev + d_prev * (zi - z_prev)
        wi, conv, its = _newton(gen, r, zi, pred, tol)
        if not conv.all():
            starts = [(z_prev[k], w_prev[k]) for k in range(na)]
            try:
                _fallback(gen, r, zi, wi, its, ~conv, tol, starts)
            except NoConvergence as exc:
                exc.node = (i, exc.node)
                raise
        w[i], iters[i] = wi, its
        deriv[i] = 1.0 / (1.0 + r * gen.f(wi)[1])
        z_prev, w_prev, d_prev = zi, wi, deriv[i]
    fw = gen.f(w)[0]
    residual = np.abs(w + r * fw - pts)
    return ResolventField(pts, w, deriv, residual, iters, grid)


def resolvent_on_circle(gen: Generator, r: float, radius: float, n_points: int,
                        radial_steps: int = 32, tol: float = DEFAULT_TOL) -> tuple:
    """``(z, G_r(z))`` on ``n_points`` equally spaced points of the circle ``|z| = radius``."""
    field = resolvent_grid(gen, r, Grid(radial_steps, n_points, radius), tol)
    return field.z[-1], field.w[-1]


class ResolventMap:
    """Callable ``z -> (G_r(z), G_r'(z))``, usable wherever a map evaluator is expected."""

    def __init__(self, gen: Generator, r: float, tol: float = DEFAULT_TOL):
        self.gen = gen
        self.r = float(r)
        self.tol = tol

    def __call__(self, z):
        scalar = np.isscalar(z)
        field = solve_many(self.gen, self.r, np.atleast_1d(z), self.tol)
        if scalar:
            return complex(field.w[0]), complex(field.deriv[0])
        return field.w.reshape(np.shape(z)), field.deriv.reshape(np.shape(z))
