"""Radial action difference ``dW(l, p)`` and everything derived from it.

``dW`` is the difference of the radial actions with and without the
potential,

    dW(l, p) = 2 int_{r0}^inf sqrt(p^2 - l^2/r^2 - 2 mu V) dr
             - 2 int_{r0'}^inf sqrt(p^2 - l^2/r^2) dr,

which is finite although both integrals diverge.  The WKB phase shift is
``dW / (2 hbar)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .potential import (
    ConvergenceError,
    DomainError,
    PotentialModel,
    ScatterPoint,
    radial_function,
    turning_point,
)
from .quadrature import ActionValue, QuadratureSpec, sqrt_endpoint_integral, tail_integral

__all__ = [
    "delta_w",
    "free_action",
    "d_delta_w_dl",
    "limit_dl",
    "delta_w_smoothed",
    "one_sided_slope",
    "wkb_phase_shift",
    "reduce_mod_pi",
    "time_delay",
    "GridRow",
    "grid_scan",
    "phase_portrait",
]

log = logging.getLogger(__name__)

Side = Literal["from_below", "from_above"]
Branch = Literal["raw", "smoothed"]


def _require_regular(pot: PotentialModel, pt: ScatterPoint) -> None:
    if pt.is_critical(pot):
        raise DomainError("the critical point (0, p_c) is excluded")


def _checked(value: float, err: float, quad: QuadratureSpec, what: str) -> ActionValue:
    out = ActionValue(value, err)
    if not out.accepted(quad.rel_tol):
        raise ConvergenceError(f"{what}: tolerance not reached (err={err:.3e})", value, err)
    return out


def free_action(l: float, p: float, r_cut: float) -> float:
    """``2 int_{|l|/p}^{r_cut} sqrt(p^2 - l^2/r^2) dr`` in closed form."""
    al = abs(l)
    if al == 0:
        return 2.0 * p * r_cut
    x = al / (p * r_cut)
    return 2.0 * (math.sqrt(max(p * p * r_cut * r_cut - al * al, 0.0)) - al * math.acos(min(x, 1.0)))


def delta_w(pot: PotentialModel, pt: ScatterPoint, quad: QuadratureSpec = QuadratureSpec()) -> ActionValue:
    """Radial action difference ``W - W'``.

    Both radial actions are integrated to a common cut-off; beyond it the
    difference of the square roots is integrated as one convergent tail.
    """
    _require_regular(pot, pt)
    if pot.is_free:
        return ActionValue(0.0, 0.0)
    l2 = pt.l * pt.l
    p2 = pt.p * pt.p
    two_mu = 2.0 * pot.mu
    r0 = turning_point(pot, pt)
    r_cut = quad.cutoff(r0, pot.length_scale)

    def scattered(r):
        if r == 0.0:
            return math.sqrt(max(p2 - two_mu * pot.e_c, 0.0))
        return math.sqrt(max(float(radial_function(pot, pt, r)), 0.0)) / r

    def tail(r):
        free = p2 - l2 / (r * r)
        a = free - two_mu * float(pot.V(r))
        # difference written without cancellation
        return -two_mu * float(pot.V(r)) / (math.sqrt(a) + math.sqrt(free))

    # the finite part is larger than dW itself; its error budget is tightened accordingly
    w_in, e_in = sqrt_endpoint_integral(scattered, r0, r_cut, quad.tightened(1e-2))
    w_tail, e_tail = tail_integral(tail, r_cut, quad)
    value = 2.0 * (w_in + w_tail) - free_action(pt.l, pt.p, r_cut)
    err = 2.0 * (e_in + e_tail) + 4.0 * np.finfo(float).eps * abs(2.0 * w_in)
    return _checked(value, err, quad, "delta_w")


def d_delta_w_dl(pot: PotentialModel, pt: ScatterPoint, quad: QuadratureSpec = QuadratureSpec()) -> ActionValue:
    """``d dW / dl`` from the ``z = r**2`` form of the integrand.

    The free part is elementary and contributes ``+sgn(l) pi``; the scattered
    part ``l int_{z0}^inf -dz / (z sqrt(z p^2 - l^2 - 2 mu z U(z)))`` is
    integrated numerically.  ``l = 0`` is excluded, see :func:`limit_dl`.
    """
    _require_regular(pot, pt)
    if pt.l == 0:
        raise DomainError("d_delta_w_dl needs l != 0; use limit_dl for the one-sided limits")
    l = pt.l
    p2 = pt.p * pt.p
    l2 = l * l
    two_mu = 2.0 * pot.mu
    r0 = turning_point(pot, pt)
    z0 = r0 * r0
    z_cut = quad.cutoff(r0, pot.length_scale) ** 2

    def integrand(z):
        q = z * (p2 - two_mu * float(pot.V(math.sqrt(z)))) - l2
        return -1.0 / (z * math.sqrt(q)) if q > 0 else 0.0

    inner, e_in = sqrt_endpoint_integral(integrand, z0, z_cut, quad)
    outer, e_out = tail_integral(integrand, z_cut, quad)
    value = l * (inner + outer) + math.copysign(math.pi, l)
    return _checked(value, abs(l) * (e_in + e_out), quad, "d_delta_w_dl")


def limit_dl(
    pot: PotentialModel,
    p: float,
    side: Side,
    quad: QuadratureSpec = QuadratureSpec(),
    exponents: Sequence[int] = (2, 3, 4, 5, 6),
) -> ActionValue:
    """One-sided limit of ``d dW / dl`` as ``l -> 0``.

    ``d dW/dl`` is sampled at ``l = -+10**-j`` and extrapolated by
    Richardson's rule assuming a leading error linear in ``l``.  The error
    estimate is the change between the last two extrapolants.

    Expected values: below the barrier the limits are ``-pi`` from below
    and ``+pi`` from above; above the barrier both vanish.
    """
    if not p > 0:
        raise DomainError("p must be positive")
    if math.isclose(p, pot.p_c, rel_tol=1e-12, abs_tol=0.0):
        raise DomainError("the l -> 0 limit is not uniform at p = p_c")
    if side not in ("from_below", "from_above"):
        raise ValueError(f"unknown side {side!r}")
    sign = -1.0 if side == "from_below" else 1.0
    ls = [sign * 10.0 ** (-j) for j in exponents]
    vals = [d_delta_w_dl(pot, ScatterPoint(l, p), quad).value for l in ls]
    extrap = [(10.0 * b - a) / 9.0 for a, b in zip(vals[:-1], vals[1:])]
    if len(extrap) < 2:
        return ActionValue(extrap[-1], abs(vals[-1] - vals[-2]))
    return ActionValue(extrap[-1], abs(extrap[-1] - extrap[-2]))


def delta_w_smoothed(pot: PotentialModel, pt: ScatterPoint, quad: QuadratureSpec = QuadratureSpec()) -> ActionValue:
    """``dW`` for ``l <= 0`` and ``dW - 2 pi l`` for ``l > 0``."""
    raw = delta_w(pot, pt, quad)
    if pt.l > 0:
        return ActionValue(raw.value - 2.0 * math.pi * pt.l, raw.err_estimate)
    return raw


def _branch_value(pot, pt, which: Branch, quad) -> float:
    if which == "raw":
        return delta_w(pot, pt, quad).value
    if which == "smoothed":
        return delta_w_smoothed(pot, pt, quad).value
    raise ValueError(f"unknown branch {which!r}")


def one_sided_slope(
    pot: PotentialModel,
    p: float,
    side: Side,
    which: Branch = "raw",
    quad: QuadratureSpec = QuadratureSpec(),
    steps: Sequence[float] = (1e-2, 1e-3, 1e-4),
) -> ActionValue:
    """One-sided ``l``-slope of ``dW`` (or its smoothed branch) at ``l = 0``.

    Difference quotients ``(F(+-h) - F(0)) / (+-h)`` extrapolated in ``h``.
    """
    sign = -1.0 if side == "from_below" else 1.0
    f0 = _branch_value(pot, ScatterPoint(0.0, p), which, quad)
    q = [(_branch_value(pot, ScatterPoint(sign * h, p), which, quad) - f0) / (sign * h) for h in steps]
    ratio = steps[0] / steps[1]
    extrap = [(ratio * b - a) / (ratio - 1.0) for a, b in zip(q[:-1], q[1:])]
    err = abs(extrap[-1] - extrap[-2]) if len(extrap) > 1 else abs(q[-1] - q[-2])
    return ActionValue(extrap[-1], err)


def reduce_mod_pi(angle: float) -> float:
    """Representative of ``angle`` modulo pi in ``[-pi/2, pi/2)``."""
    return (angle + 0.5 * math.pi) % math.pi - 0.5 * math.pi


def wkb_phase_shift(
    pot: PotentialModel,
    pt: ScatterPoint,
    hbar: float,
    quad: QuadratureSpec = QuadratureSpec(),
    reduced: bool = False,
) -> float:
    """Semiclassical phase shift ``dW / (2 hbar)``; ``reduced`` maps it mod pi."""
    if not hbar > 0:
        raise DomainError("hbar must be positive")
    delta = delta_w(pot, pt, quad).value / (2.0 * hbar)
    return reduce_mod_pi(delta) if reduced else delta


def time_delay(
    pot: PotentialModel,
    l: float,
    e: float,
    quad: QuadratureSpec = QuadratureSpec(),
    rel_step: float = 1e-6,
) -> ActionValue:
    """Classical time delay ``d dW / dE`` at fixed ``l``.

    Central differences with steps ``h`` and ``h/2``, combined by
    Richardson extrapolation.
    """
    h = rel_step * max(1.0, abs(e))
    if e - h <= 0:
        raise DomainError("energy too small for the difference stencil")
    if l == 0 and not pot.is_free and e - h <= pot.e_c <= e + h:
        raise DomainError("stencil straddles the barrier energy at l = 0")
    fine = quad.tightened()

    def w(energy):
        return delta_w(pot, ScatterPoint(l, math.sqrt(2.0 * pot.mu * energy)), fine).value

    d1 = (w(e + h) - w(e - h)) / (2.0 * h)
    d2 = (w(e + 0.5 * h) - w(e - 0.5 * h)) / h
    value = (4.0 * d2 - d1) / 3.0
    return ActionValue(value, abs(value - d2))


@dataclass(frozen=True)
class GridRow:
    l: float
    p: float
    value: float | None


def grid_scan(
    pot: PotentialModel,
    l_range: tuple[float, float],
    p_range: tuple[float, float],
    nl: int,
    np_: int,
    which: Branch = "raw",
    quad: QuadratureSpec = QuadratureSpec(),
) -> list[GridRow]:
    """Tabulate ``dW`` (or the smoothed branch) on a regular grid.

    Rows run over ``p`` (outer) and ``l`` (inner).  Points where the
    computation fails are kept with ``value=None``.
    """
    if nl < 1 or np_ < 1:
        raise ValueError("grid sizes must be positive")
    ls = np.linspace(l_range[0], l_range[1], nl)
    ps = np.linspace(p_range[0], p_range[1], np_)
    if np.any(ps <= 0):
        raise DomainError("p range must be positive")
    rows = []
    for p in ps:
        for l in ls:
            pt = ScatterPoint(float(l), float(p))
            if pt.is_critical(pot):
                raise DomainError("grid contains the critical point")
            try:
                value = _branch_value(pot, pt, which, quad)
            except (ConvergenceError, RuntimeError) as exc:
                log.warning("grid point (l=%g, p=%g) failed: %s", l, p, exc)
                value = None
            rows.append(GridRow(float(l), float(p), value))
    return rows


def phase_portrait(pot: PotentialModel, pt: ScatterPoint, r_max: float, n: int = 400) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Radial momentum ``p_r(r) >= 0`` with and without the potential.

    Returns ``(r, pr_free, pr_potential)``; forbidden radii give nan.  The
    area between the two curves (times two for the lower branch) is ``dW``.
    """
    if n < 2 or not r_max > 0:
        raise ValueError("need n >= 2 and r_max > 0")
    r = np.linspace(r_max / n, r_max, n)
    free = pt.p * pt.p - pt.l * pt.l / (r * r)
    scat = free - 2.0 * pot.mu * pot.V(r)
    with np.errstate(invalid="ignore"):
        return r, np.where(free >= 0, np.sqrt(free), np.nan), np.where(scat >= 0, np.sqrt(scat), np.nan)
