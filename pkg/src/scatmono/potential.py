"""Smooth repulsive central potentials and their turning points.

A :class:`PotentialModel` bundles ``V``, ``V'`` and ``V''`` together with the
reduced mass and the derived barrier data ``e_c = V(0)``,
``p_c = sqrt(2 mu e_c)`` and the curvature constant ``alpha`` defined by
``V(r) = e_c - mu alpha**2 r**2 / 2 + O(r**4)``.

Units are whatever the caller uses consistently; the defaults ``mu = 1`` and
``hbar = 0.25`` are the settings used by the command-line recipes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "DEFAULT_MU",
    "DEFAULT_HBAR",
    "DomainError",
    "ConvergenceError",
    "PotentialModel",
    "ScatterPoint",
    "lorentzian",
    "zero_potential",
    "custom_potential",
    "evaluate",
    "critical_data",
    "turning_point",
    "radial_function",
]

DEFAULT_MU = 1.0
DEFAULT_HBAR = 0.25


class DomainError(ValueError):
    """Input outside the domain of an operation (critical point, bad model)."""


class ConvergenceError(RuntimeError):
    """A numerical method did not reach its tolerance.

    The best available estimate is kept on the exception so callers can
    still inspect it.
    """

    def __init__(self, message: str, best_estimate: float = math.nan, err_estimate: float = math.inf):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.err_estimate = err_estimate


Radial = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PotentialModel:
    """A smooth, monotone, repulsive central potential.

    Attributes
    ----------
    kind : str
        ``"lorentzian"``, ``"zero"`` or ``"custom"``.
    params : dict
        Family parameters, e.g. ``{"a": 20.0, "b": 1.0}``.
    mu : float
        Reduced mass.
    V, dV, d2V : callable
        The potential and its first two radial derivatives (numpy-vectorised).
    length_scale : float
        Range of the potential; used to place quadrature cut-offs.
    tail_c2 : float
        ``lim r**2 V(r)`` for r -> infinity. Non-zero for potentials with an
        inverse-square tail (the Lorentzian); used for asymptotic matching of
        radial wavefunctions.
    """

    kind: str
    params: dict = field(compare=True)
    mu: float
    V: Radial = field(repr=False, compare=False)
    dV: Radial = field(repr=False, compare=False)
    d2V: Radial = field(repr=False, compare=False)
    length_scale: float = 1.0
    tail_c2: float = 0.0
    e_c: float = field(init=False)
    p_c: float = field(init=False)
    alpha: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise DomainError(f"reduced mass must be positive, got {self.mu}")
        if not self.length_scale > 0:
            raise DomainError("length_scale must be positive")
        if self.kind != "zero":
            _validate_repulsive(self)
        e_c = float(self.V(np.array(0.0)))
        v2 = float(self.d2V(np.array(0.0)))
        if self.kind != "zero" and v2 > 0:
            raise DomainError("V''(0) must be <= 0 for a barrier-top origin")
        object.__setattr__(self, "e_c", e_c)
        object.__setattr__(self, "p_c", math.sqrt(2.0 * self.mu * e_c) if e_c > 0 else 0.0)
        object.__setattr__(self, "alpha", math.sqrt(max(-v2, 0.0) / self.mu))

    @property
    def is_free(self) -> bool:
        return self.kind == "zero"

    def __call__(self, r):
        return self.V(r)

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params, "mu": self.mu}


def _validate_repulsive(pot: PotentialModel) -> None:
    r = np.logspace(-6, 6, 241) * pot.length_scale
    v = np.asarray(pot.V(r), dtype=float)
    dv = np.asarray(pot.dV(r), dtype=float)
    if not np.all(np.isfinite(v)) or not np.all(np.isfinite(dv)):
        raise DomainError("potential is not finite on the validation grid")
    # values that underflow to zero far out are allowed
    if float(pot.V(np.array(0.0))) <= 0 or np.any(v < 0):
        raise DomainError("potential must be positive (repulsive) for r >= 0")
    live = v > 0
    if np.any(dv[live] >= 0) or np.any(dv > 0):
        raise DomainError("potential must be strictly decreasing for r > 0")
    # r*V(r) must die off, otherwise the action difference has a divergent tail
    rt = np.logspace(2, 6, 5) * pot.length_scale
    tail = rt * np.asarray(pot.V(rt), dtype=float)
    if not (np.all(np.diff(tail) <= 0) and tail[-1] <= 1e-3 * tail[0]):
        raise DomainError("potential decays too slowly at large r")


def lorentzian(a: float = 20.0, b: float = 1.0, mu: float = DEFAULT_MU) -> PotentialModel:
    """The bump ``V(r) = a / (1 + (b r)**2)``."""
    if not (a > 0 and b > 0):
        raise DomainError(f"lorentzian needs a > 0 and b > 0, got a={a}, b={b}")
    b2 = b * b

    def V(r):
        return a / (1.0 + b2 * np.square(r))

    def dV(r):
        return -2.0 * a * b2 * r / np.square(1.0 + b2 * np.square(r))

    def d2V(r):
        q = b2 * np.square(r)
        return -2.0 * a * b2 * (1.0 - 3.0 * q) / (1.0 + q) ** 3

    return PotentialModel(
        "lorentzian", {"a": float(a), "b": float(b)}, float(mu), V, dV, d2V,
        length_scale=1.0 / b, tail_c2=a / b2,
    )


def zero_potential(mu: float = DEFAULT_MU) -> PotentialModel:
    """Free motion; only meaningful as a reference."""

    def V(r):
        return np.zeros_like(np.asarray(r, dtype=float))

    return PotentialModel("zero", {}, float(mu), V, V, V)


def custom_potential(
    V: Radial,
    dV: Radial,
    d2V: Radial,
    mu: float = DEFAULT_MU,
    length_scale: float = 1.0,
    tail_c2: float = 0.0,
    **params,
) -> PotentialModel:
    """Wrap a user supplied ``(V, V', V'')`` triple; validated like the built-ins."""
    return PotentialModel("custom", dict(params), float(mu), V, dV, d2V,
                          length_scale=float(length_scale), tail_c2=float(tail_c2))


@dataclass(frozen=True)
class ScatterPoint:
    """A point ``(l, p)`` of angular momentum and asymptotic momentum."""

    l: float
    p: float

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise DomainError(f"asymptotic momentum must be positive, got {self.p}")

    def energy(self, mu: float = DEFAULT_MU) -> float:
        return self.p * self.p / (2.0 * mu)

    def is_critical(self, pot: PotentialModel) -> bool:
        return self.l == 0 and not pot.is_free and math.isclose(self.p, pot.p_c, rel_tol=1e-12, abs_tol=0.0)


def evaluate(pot: PotentialModel, r):
    """Return ``V(r)``; negative radii are rejected."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError("radius must be non-negative")
    out = pot.V(arr)
    return float(out) if np.ndim(out) == 0 else out


def critical_data(pot: PotentialModel) -> tuple[float, float, float]:
    """``(e_c, p_c, alpha)`` of the barrier top at the origin."""
    if pot.e_c <= 0:
        raise DomainError("critical data undefined for a non-repulsive model")
    return pot.e_c, pot.p_c, pot.alpha


def radial_function(pot: PotentialModel, pt: ScatterPoint, r):
    """``h(r) = r^2 p^2 - l^2 - 2 mu r^2 V(r)``; its largest root is the turning point."""
    r = np.asarray(r, dtype=float)
    r2 = r * r
    return r2 * (pt.p * pt.p - 2.0 * pot.mu * pot.V(r)) - pt.l * pt.l


def turning_point(pot: PotentialModel, pt: ScatterPoint) -> float:
    """Largest non-negative root of :func:`radial_function`.

    For ``l = 0`` above the barrier (``p > p_c``) the particle reaches the
    origin and the turning point is 0.
    """
    if pt.is_critical(pot):
        raise DomainError("turning point undefined at the critical point (0, p_c)")
    l = abs(pt.l)
    p = pt.p
    if pot.is_free:
        return l / p
    if l * l == 0.0:
        # l so small that l**2 underflows behaves as head-on
        if p > pot.p_c:
            return 0.0
        # p**2 = 2 mu V(r), V monotone
        g = lambda r: p * p - 2.0 * pot.mu * float(pot.V(r))
    else:
        g = lambda r: float(radial_function(pot, pt, r))

    lo = l / p if l * l > 0.0 else 0.0
    hi = max(lo, pot.length_scale)
    for _ in range(200):
        if g(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError("failed to bracket the turning point")
    return brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
