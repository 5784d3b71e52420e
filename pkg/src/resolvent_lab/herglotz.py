"""Herglotz functions, semigroup generators and reference starlike maps.

A generator vanishing at the origin is written ``f(z) = z p(z)`` with
``Re p >= 0``.  Two concrete families are supported:

* ``HerglotzFn``: ``p`` given by a finite atomic boundary measure plus an
  imaginary constant, ``p(z) = sum mu_k (1 + z conj(zeta_k)) / (1 - z conj(zeta_k)) + i gamma``.
* ``OmegaForm``: ``p(z) = (q + conj(q) w(z)) / (1 - w(z))`` with ``w(z) = c z**m``.

All evaluators accept scalars or numpy arrays and return the value together
with the exact derivative.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    BadOrder,
    BadQ,
    EmptyMeasure,
    NegativeMass,
    NotProbability,
    OutsideDisk,
)

TWO_PI = 2.0 * math.pi


def _reduce_angle(angle: float) -> float:
    a = math.fmod(float(angle), TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod of a value just below 0 can round up to exactly 2*pi
    return 0.0 if a >= TWO_PI else a


def _as_complex(z):
    if np.isscalar(z):
        return complex(z), True
    return np.asarray(z, dtype=complex), False


def _check_disk(z) -> None:
    if np.any(np.abs(z) >= 1.0):
        raise OutsideDisk(f"evaluation point outside the unit disk: max |z| = {np.max(np.abs(z))!r}")


@dataclass(frozen=True)
class BoundaryAtom:
    angle: float
    mass: float

    @property
    def zeta(self) -> complex:
        return cmath.exp(1j * self.angle)


@dataclass(frozen=True)
class HerglotzFn:
    atoms: tuple
    gamma: float = 0.0

    @property
    def total_mass(self) -> float:
        return math.fsum(a.mass for a in self.atoms)

    @property
    def q(self) -> complex:
        """Value at the origin, ``sum of masses + i gamma``."""
        return complex(self.total_mass, self.gamma)

    def _arrays(self):
        angles = np.array([a.angle for a in self.atoms])
        masses = np.array([a.mass for a in self.atoms])
        return np.exp(-1j * angles), masses

    def __call__(self, z):
        """Return ``(p(z), p'(z))`` without a domain check."""
        z, scalar = _as_complex(z)
        zeta_bar, masses = self._arrays()
        u = np.multiply.outer(z, zeta_bar)
        den = 1.0 - u
        # (1+u)/(1-u) = 1 + 2u/(1-u); summing the constants exactly makes p(0) = q bit for bit
        value = self.q + (2.0 * u / den) @ masses
        deriv = (2.0 * zeta_bar / den**2) @ masses
        if scalar:
            return complex(value), complex(deriv)
        return value, deriv

    def rotated(self, theta: float) -> "HerglotzFn":
        """Measure of ``z -> p(e^{i theta} z)``."""
        atoms = tuple(BoundaryAtom(_reduce_angle(a.angle - theta), a.mass) for a in self.atoms)
        return HerglotzFn(atoms, self.gamma)


@dataclass(frozen=True)
class OmegaForm:
    q: complex
    c: complex = 0j
    m: int = 1

    def __post_init__(self):
        if not complex(self.q).real > 0.0:
            raise BadQ(f"Re q must be positive, got q={self.q!r}")
        if abs(self.c) > 1.0:
            raise ValueError(f"|c| must not exceed 1 for w(z) = c z^m to map the disk into itself, got c={self.c!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")

    def __call__(self, z):
        z, scalar = _as_complex(z)
        q = complex(self.q)
        m = int(self.m)
        w = self.c * z**m
        dw = m * self.c * z ** (m - 1)
        den = 1.0 - w
        value = (q + q.conjugate() * w) / den
        deriv = 2.0 * q.real * dw / den**2
        if scalar:
            return complex(value), complex(deriv)
        return value, deriv

    def rotated(self, theta: float) -> "OmegaForm":
        return OmegaForm(self.q, self.c * cmath.exp(1j * self.m * theta), self.m)


@dataclass(frozen=True)
class Generator:
    """Generator ``f(z) = z p(z)`` with ``p`` in Herglotz or omega form."""

    form: Union[HerglotzFn, OmegaForm]

    @property
    def q(self) -> complex:
        """``q = p(0) = f'(0)``."""
        return complex(self.form.q)

    def p(self, z):
        """Unchecked ``(p(z), p'(z))``."""
        return self.form(z)

    def f(self, z):
        """Unchecked ``(f(z), f'(z))``."""
        p, dp = self.form(z)
        return z * p, p + z * dp

    def rotated(self, theta: float) -> "Generator":
        """Generator ``z -> e^{-i theta} f(e^{i theta} z)``."""
        return Generator(self.form.rotated(theta))

    def to_dict(self) -> dict:
        if isinstance(self.form, HerglotzFn):
            return {
                "form": "herglotz",
                "atoms": [{"angle": a.angle, "mass": a.mass} for a in self.form.atoms],
                "gamma": self.form.gamma,
            }
        q, c = complex(self.form.q), complex(self.form.c)
        return {
            "form": "omega",
            "q": {"re": q.real, "im": q.imag},
            "c": {"re": c.real, "im": c.imag},
            "m": int(self.form.m),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def make_herglotz(atoms: Iterable, gamma: float = 0.0) -> HerglotzFn:
    """Build a Herglotz function from boundary atoms.

    ``atoms`` may hold :class:`BoundaryAtom` instances or ``(angle, mass)``
    pairs.  Angles are reduced modulo 2*pi.
    """
    built = []
    for atom in atoms:
        angle, mass = (atom.angle, atom.mass) if isinstance(atom, BoundaryAtom) else atom
        angle, mass = float(angle), float(mass)
        if not math.isfinite(angle):
            raise ValueError(f"atom angle must be finite, got {angle!r}")
        if mass < 0.0 or math.isnan(mass):
            raise NegativeMass(f"atom mass must be nonnegative, got {mass!r}")
        built.append(BoundaryAtom(_reduce_angle(angle), mass))
    if not built or math.fsum(a.mass for a in built) <= 0.0:
        raise EmptyMeasure("the boundary measure needs at least one atom of positive mass")
    return HerglotzFn(tuple(built), float(gamma))


def herglotz_generator(atoms: Iterable, gamma: float = 0.0) -> Generator:
    return Generator(make_herglotz(atoms, gamma))


def omega_generator(q: complex, c: complex = 0j, m: int = 1) -> Generator:
    return Generator(OmegaForm(complex(q), complex(c), int(m)))


def linear_generator(q: complex) -> Generator:
    """``f(z) = q z``."""
    return omega_generator(q, 0j, 1)


def koebe_generator() -> Generator:
    """``f(z) = z (1 + z) / (1 - z)``, the extremal generator with ``q = 1``."""
    return omega_generator(1.0, 1.0, 1)


def eval_p(p: Union[HerglotzFn, Generator], z):
    """Value and derivative of a Herglotz function at ``|z| < 1``."""
    z, _ = _as_complex(z)
    _check_disk(z)
    if isinstance(p, Generator):
        return p.p(z)
    return p(z)


def eval_f(gen: Generator, z):
    """Value and derivative of ``f(z) = z p(z)`` at ``|z| < 1``."""
    z, _ = _as_complex(z)
    _check_disk(z)
    return gen.f(z)


def generator_from_dict(spec: dict) -> Generator:
    form = spec.get("form")
    if form == "herglotz":
        atoms = [(a["angle"], a["mass"]) for a in spec["atoms"]]
        return herglotz_generator(atoms, spec.get("gamma", 0.0))
    if form == "omega":
        def cx(v):
            if isinstance(v, dict):
                return complex(v.get("re", 0.0), v.get("im", 0.0))
            return complex(v)

        return omega_generator(cx(spec["q"]), cx(spec.get("c", 0.0)), int(spec.get("m", 1)))
    raise ValueError(f"unknown generator form {form!r}")


def generator_from_json(text: str) -> Generator:
    return generator_from_dict(json.loads(text))


@dataclass(frozen=True)
class ReferenceMap:
    """Normalized starlike map of a prescribed order.

    ``h(z) = z exp(-2 (1 - order) sum nu_k log(1 - z conj(zeta_k)))`` with a
    probability measure ``nu``; ``Re(z h'/h) > order`` on the disk.
    """

    order: float
    atoms: tuple

    def __call__(self, z):
        z, scalar = _as_complex(z)
        angles = np.array([a for a, _ in self.atoms])
        nu = np.array([w for _, w in self.atoms])
        zeta_bar = np.exp(-1j * angles)
        u = np.multiply.outer(z, zeta_bar)
        k = 2.0 * (1.0 - self.order)
        expo = np.exp(-k * (np.log(1.0 - u) @ nu))
        value = z * expo
        deriv = expo * (1.0 + k * ((u / (1.0 - u)) @ nu))
        if scalar:
            return complex(value), complex(deriv)
        return value, deriv


def make_starlike_reference(order: float, atoms: Sequence) -> ReferenceMap:
    """Starlike map of order ``order`` built from ``(angle, probability)`` pairs."""
    order = float(order)
    if not 0.0 < order < 1.0:
        raise BadOrder(f"order must lie in (0, 1), got {order!r}")
    pairs = tuple((_reduce_angle(a), float(w)) for a, w in atoms)
    if not pairs or any(w < 0.0 for _, w in pairs):
        raise NotProbability("reference measure needs nonnegative masses")
    if abs(math.fsum(w for _, w in pairs) - 1.0) > 1e-12:
        raise NotProbability(f"masses must sum to 1, got {math.fsum(w for _, w in pairs)!r}")
    return ReferenceMap(order, pairs)
