"""Quadrature settings and the endpoint-singular integration helper."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

__all__ = ["QuadratureSpec", "ActionValue", "sqrt_endpoint_integral", "tail_integral"]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances controlling every improper or endpoint-singular integral.

    ``r_cut`` splits the radial range into a finite part, integrated term by
    term, and a tail where only the convergent difference is integrated.
    ``None`` picks it from the turning points and the potential's range.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r_cut: float | None = None
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")

    def cutoff(self, r_turn: float, length_scale: float) -> float:
        if self.r_cut is not None:
            if self.r_cut <= r_turn:
                raise ValueError(f"r_cut={self.r_cut} does not exceed the turning point {r_turn}")
            return self.r_cut
        return max(4.0 * r_turn, r_turn + 10.0 * length_scale)

    def tightened(self, factor: float = 1e-3) -> "QuadratureSpec":
        return QuadratureSpec(
            rel_tol=max(self.rel_tol * factor, 1e-14),
            abs_tol=max(self.abs_tol * factor, 1e-15),
            r_cut=self.r_cut,
            max_subdivisions=self.max_subdivisions * 2,
        )


@dataclass(frozen=True)
class ActionValue:
    """A computed scalar with its absolute error estimate."""

    value: float
    err_estimate: float

    def __float__(self) -> float:
        return self.value

    def accepted(self, rel_tol: float) -> bool:
        return self.err_estimate <= 10.0 * rel_tol * (1.0 + abs(self.value))


def _quad(f, a, b, spec: QuadratureSpec, points=None) -> tuple[float, float]:
    with warnings.catch_warnings():
        # roundoff warnings are judged by the returned error estimate instead
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(
            f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=spec.max_subdivisions, points=points,
        )
    return val, err


def sqrt_endpoint_integral(
    f: Callable[[float], float],
    x_turn: float,
    x_end: float,
    spec: QuadratureSpec,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[x_turn, x_end]`` where ``f`` may have an
    inverse or direct square-root singularity at ``x_turn``.

    Uses ``x = x_turn + s**2`` so the integrand in ``s`` is smooth.  The
    ``s`` range is split geometrically around ``sqrt(x_turn)`` so structure
    on the scale of a small turning point is resolved.
    """
    if x_end <= x_turn:
        return 0.0, 0.0
    s_end = math.sqrt(x_end - x_turn)

    def g(s):
        return 2.0 * s * f(x_turn + s * s)

    breaks = []
    if x_turn > 0:
        d = x_turn
        while d < x_end - x_turn:
            breaks.append(math.sqrt(d))
            d *= 4.0
    total = 0.0
    err = 0.0
    edges = [0.0, *breaks, s_end]
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _quad(g, lo, hi, spec)
        total += v
        err += e
    return total, err


def tail_integral(f: Callable[[float], float], x_start: float, spec: QuadratureSpec) -> tuple[float, float]:
    """Integrate a decaying ``f`` from ``x_start`` to infinity."""
    return _quad(f, x_start, np.inf, spec)
