"""Adaptive Dormand-Prince 5(4) integrator for batches of complex autonomous ODEs.

All trajectories in a batch share one step size; the error norm is the
maximum over the batch, so every trajectory meets the requested tolerance.
A domain predicate is checked at every stage and after every accepted step.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .errors import DomainEscape, StepUnderflow

# Dormand & Prince (1980), 7 stages with FSAL; the field is autonomous so nodes are not needed
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6] + (0.0,)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
MAX_STEPS = 1_000_000


class _StageOutside(Exception):
    pass


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0,
    s_end: float,
    s_out=None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    inside: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    escape_radius: Optional[float] = None,
):
    """Integrate ``dy/ds = rhs(y)`` from ``s = 0`` to ``s_end``.

    Parameters
    ----------
    rhs : callable
        Vectorized right-hand side; must accept any state with ``inside(y)`` true.
    y0 : array_like
        Complex initial states (batch).
    s_end : float
        Final parameter value (>= 0).
    s_out : array_like, optional
        Increasing output parameters in ``[0, s_end]``; the integrator steps
        exactly onto each of them.  Defaults to ``[s_end]``.
    inside : callable, optional
        Domain predicate on states; stages outside are rejected steps.
    escape_radius : float, optional
        An accepted state with modulus above this raises :class:`DomainEscape`.

    Returns
    -------
    s_out : ndarray
    y : ndarray of shape ``(len(s_out),) + y0.shape``
    """
    y = np.array(y0, dtype=complex, copy=True)
    s_end = float(s_end)
    s_out = np.array([s_end] if s_out is None else s_out, dtype=float)
    if np.any(np.diff(s_out) < 0) or (s_out.size and (s_out[0] < 0 or s_out[-1] > s_end * (1 + 1e-15))):
        raise ValueError("output parameters must be increasing within [0, s_end]")
    out = np.empty((s_out.size,) + y.shape, dtype=complex)

    def f(state):
        if inside is not None and not np.all(inside(state)):
            raise _StageOutside
        val = rhs(state)
        if not np.all(np.isfinite(val)):
            raise _StageOutside
        return val

    def norm(v, scale):
        return float(np.max(np.abs(v) / scale)) if v.size else 0.0

    s = 0.0
    k = 0
    while k < s_out.size and s_out[k] <= 0.0:
        out[k] = y
        k += 1
    if k == s_out.size:
        return s_out, out

    k1 = f(y)
    scale0 = atol + rtol * np.abs(y)
    d0, d1 = norm(y, scale0), norm(k1, scale0)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, s_end)
    step_index = 0
    underflow = 1e-14 * max(1.0, s_end)
    for _ in range(MAX_STEPS):
        target = s_out[k]
        h_prop = h
        h = min(h, target - s)
        hit = h >= target - s
        try:
            ks = [k1]
            for i in range(1, 7):
                yi = y + h * sum(a * kj for a, kj in zip(_A[i], ks) if a != 0.0)
                ks.append(f(yi))
        except _StageOutside:
            h *= 0.25
            if h < underflow:
                raise DomainEscape(f"trajectory reached the domain boundary near s={s!r}",
                                   s=s, u=y, step_index=step_index)
            continue
        y_new = y + h * sum(b * kj for b, kj in zip(_B, ks) if b != 0.0)
        err_vec = h * sum(e * kj for e, kj in zip(_E, ks) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = norm(err_vec, scale)
        if err <= 1.0:
            s = target if hit else s + h
            y = y_new
            k1 = ks[6]
            step_index += 1
            if escape_radius is not None and np.any(np.abs(y) > escape_radius):
                idx = np.nonzero(np.abs(y) > escape_radius)[0] if y.ndim else None
                raise DomainEscape(f"trajectory left the disk of radius {escape_radius!r} at s={s!r}",
                                   s=s, u=y, step_index=step_index, indices=idx)
            while k < s_out.size and s_out[k] <= s:
                out[k] = y
                k += 1
            if k == s_out.size:
                return s_out, out
            factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
            h = max(h * factor, h_prop) if hit else h * factor
        else:
            h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
            if h < underflow:
                raise StepUnderflow(f"step size underflow at s={s!r}")
    raise StepUnderflow("maximum number of steps exceeded")
