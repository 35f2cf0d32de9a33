"""Exact partial-wave phase shifts from the 2D radial Schroedinger equation.

For ``psi = r**-0.5 u(r) exp(i m theta)`` the radial equation is

    u'' + [k^2 - (m^2 - 1/4) / r^2 - U(r)] u = 0,    U = 2 mu V / hbar^2,

with the regular solution ``u ~ r**(|m| + 1/2)``.  Far out
``u ~ cos(k r - |m| pi / 2 - pi / 4 + delta)``.

Numerics
--------
The radius is mapped to ``r = L log(1 + exp(t))``, logarithmic near the
origin and uniform far out.  With ``u = sqrt(dr/dt) w`` the equation keeps
the form ``w'' = F(t) w`` (the Schwarzian of the map enters ``F``), which is
stepped by Numerov's method on a uniform ``t`` mesh.  Steps are written as
2x2 transfer matrices and multiplied by a vectorised prefix scan.  Results
for step ``h``, ``h/2``, ``h/4``, ... are combined by Richardson
extrapolation until two successive extrapolants agree.

A potential with an inverse-square tail ``C2 / r^2`` is matched to Bessel
functions of order ``nu = sqrt(m^2 + 2 mu C2 / hbar^2)``, which solve the far
field exactly up to the faster decaying remainder.  ``u`` and ``u'`` are
matched at a single radius ``R``; the remainder beyond ``R`` is added to
first order in the variable-phase equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import jv, jvp, yv, yvp

from .actions import delta_w, reduce_mod_pi
from .potential import ConvergenceError, DomainError, PotentialModel, ScatterPoint
from .quadrature import QuadratureSpec

__all__ = ["MeshSpec", "RadialSolution", "ComparisonRow", "solve_radial", "compare_wkb", "bessel_order"]


@dataclass(frozen=True)
class MeshSpec:
    """Controls for :func:`solve_radial`.

    Attributes
    ----------
    step : float
        Coarsest step as a fraction of the far-field wavelength / (2 pi),
        i.e. ``k * L * h``.
    r_match : float or None
        Matching radius in units of the potential's length scale; ``None``
        picks ``20``.
    tol : float
        Required agreement of successive Richardson extrapolants.
    max_halvings : int
        Refinement levels tried before giving up.
    r_start : float
        Innermost radius, in units of the length scale.
    """

    step: float = 0.05
    r_match: float | None = None
    tol: float = 1e-9
    max_halvings: int = 5
    r_start: float = 1e-6

    def __post_init__(self) -> None:
        if not (self.step > 0 and self.tol > 0 and self.r_start > 0):
            raise ValueError("mesh parameters must be positive")
        if self.max_halvings < 2:
            raise ValueError("need at least two halvings for an error estimate")

    def halved(self) -> "MeshSpec":
        return MeshSpec(self.step / 2, self.r_match, self.tol, self.max_halvings, self.r_start)

    def with_match(self, r_match: float) -> "MeshSpec":
        return MeshSpec(self.step, r_match, self.tol, self.max_halvings, self.r_start)


@dataclass(frozen=True)
class RadialSolution:
    """Regular radial solution on the finest mesh used, and its phase shift.

    ``u`` is normalised to unit amplitude far out.  ``delta_exact`` is reduced
    to ``[-pi/2, pi/2)``; ``err_estimate`` is the Richardson error.
    """

    m: int
    k_wave: float
    grid: np.ndarray
    u: np.ndarray
    delta_exact: float
    err_estimate: float
    r_match: float
    hbar: float
    mu: float

    def residual(self, pot: PotentialModel, n_samples: int = 50) -> float:
        """Largest relative residual of the radial equation at interior samples.

        ``u''`` is taken from a five-point stencil on the (non-uniform) grid by
        local polynomial fitting; the result is a truncation-level number.
        """
        r, u = self.grid, self.u
        idx = np.linspace(3, len(r) - 4, n_samples).astype(int)
        worst = 0.0
        U = 2.0 * self.mu / self.hbar**2
        for i in idx:
            rs, us = r[i - 2:i + 3], u[i - 2:i + 3]
            x = rs - r[i]
            # second derivative of the interpolating quartic at x = 0
            c = np.polyfit(x / x[-1], us, 4)
            upp = 2.0 * c[-3] / x[-1] ** 2
            q = self.k_wave**2 - (self.m**2 - 0.25) / r[i] ** 2 - U * float(pot.V(r[i]))
            scale = abs(q * u[i]) + abs(upp) + 1e-300
            worst = max(worst, abs(upp + q * u[i]) / scale)
        return worst


def bessel_order(pot: PotentialModel, m: int, hbar: float) -> float:
    """Order of the far-field Bessel functions, ``sqrt(m^2 + 2 mu C2 / hbar^2)``."""
    return math.sqrt(m * m + 2.0 * pot.mu * pot.tail_c2 / hbar**2)


class _Map:
    """``r = L log(1 + e^t)`` and the quantities needed for the Liouville form."""

    def __init__(self, L: float):
        self.L = L

    def r(self, t):
        return self.L * np.logaddexp(0.0, t)

    def t_of(self, r: float) -> float:
        x = r / self.L
        # log(expm1(x)) without overflow for large x
        return x + math.log(-math.expm1(-x))

    def sigma(self, t):
        return 1.0 / (1.0 + np.exp(-t))

    def one_minus_sigma(self, t):
        return 1.0 / (1.0 + np.exp(t))


def _coefficient(pot: PotentialModel, m: int, k: float, hbar: float, mp: _Map, t: np.ndarray) -> np.ndarray:
    """``F(t)`` in ``w'' = F w``."""
    r = mp.r(t)
    s = mp.sigma(t)
    gp = mp.L * s
    U = 2.0 * pot.mu / hbar**2 * pot.V(r)
    # (m^2 - 1/4) g'^2 / r^2 tends to m^2 - 1/4 as t -> -inf
    ratio = gp / r
    schwarz_half = -0.25 * mp.one_minus_sigma(t) * (1.0 + s)
    return gp * gp * (U - k * k) + (m * m - 0.25) * ratio * ratio - schwarz_half


def _start_values(pot: PotentialModel, m: int, k: float, hbar: float, r: np.ndarray) -> np.ndarray:
    """Two-term Frobenius series of the regular solution ``u``."""
    am = abs(m)
    U0 = 2.0 * pot.mu / hbar**2 * pot.e_c
    c = (U0 - k * k) / (4.0 * am + 4.0)
    return r ** (am + 0.5) * (1.0 + c * r * r)


def _prefix_products(A: np.ndarray) -> np.ndarray:
    """``P[i] = A[i] @ A[i-1] @ ... @ A[0]`` by a log-depth scan."""
    P = A.copy()
    d = 1
    n = len(P)
    while d < n:
        P[d:] = P[d:] @ P[:-d]
        d *= 2
    return P


def _numerov(F: np.ndarray, h: float, w0: float, w1: float) -> np.ndarray:
    """Numerov solution of ``w'' = F w`` on a uniform mesh from two start values."""
    one_m = 1.0 - h * h * F / 12.0
    # summed form on (y_n, d_n = y_n - y_{n-1}) with y = (1 - h^2 F / 12) w;
    # the step matrices stay close to the identity, which keeps roundoff small
    b = (h * h * F / one_m)[1:-1]
    A = np.empty((len(b), 2, 2))
    A[:, 0, 0] = 1.0 + b
    A[:, 0, 1] = 1.0
    A[:, 1, 0] = b
    A[:, 1, 1] = 1.0
    P = _prefix_products(A)
    y0, y1 = one_m[0] * w0, one_m[1] * w1
    y = np.empty(len(F))
    y[0], y[1] = y0, y1
    y[2:] = P[:, 0, 0] * y1 + P[:, 0, 1] * (y1 - y0)
    if not np.all(np.isfinite(y)):
        raise ConvergenceError("radial integration overflowed")
    return y / one_m


def _tail_correction(pot: PotentialModel, m: int, k: float, hbar: float, nu: float, R: float, delta_nu: float) -> float:
    """First-order variable-phase change of ``delta_nu`` from ``R`` to infinity.

    ``d delta/dr = -(1/k) W(r) [j cos delta - n sin delta]^2`` with the
    Riccati-Bessel-like ``j = sqrt(pi k r / 2) J_nu(k r)`` and ``W`` the part
    of ``U`` not absorbed into ``nu``.
    """
    two_mu_h2 = 2.0 * pot.mu / hbar**2

    def W(r):
        return two_mu_h2 * (pot.V(r) - pot.tail_c2 / (r * r))

    c, s = math.cos(delta_nu), math.sin(delta_nu)
    # oscillatory part on [R, 8R] by composite Gauss-Legendre, 16 nodes per half wavelength
    R_far = 8.0 * R
    n_panels = int(math.ceil((R_far - R) * k / math.pi)) + 1
    xg, wg = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(R, R_far, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    r = (mid + half * xg).ravel()
    w = (half * wg).ravel()
    z = k * r
    amp = np.sqrt(0.5 * math.pi * z)
    f = amp * (jv(nu, z) * c - yv(nu, z) * s)
    near = float(np.sum(w * W(r) * f * f))
    # beyond 8R the square averages to 1/2
    xs = np.geomspace(R_far, 1e6 * R_far, 4001)
    far = float(np.trapezoid(0.5 * W(xs), xs)) + 0.5 * float(W(xs[-1])) * xs[-1]
    return -(near + far) / k


def _phase_once(pot: PotentialModel, m: int, k: float, hbar: float, mesh: MeshSpec, level: int, keep: bool = False):
    L = pot.length_scale
    mp = _Map(L)
    R_match = (mesh.r_match if mesh.r_match is not None else 20.0) * L
    # the matching radius is the same mesh node at every refinement level
    t0 = mp.t_of(mesh.r_start * L)
    tR = mp.t_of(R_match)
    n0 = int(math.ceil((tR - t0) * k * L / mesh.step))
    n = n0 * 2**level
    h = (tR - t0) / n
    # two extra nodes for the centred derivative at R
    t = t0 + h * np.arange(n + 3)
    F = _coefficient(pot, m, k, hbar, mp, t)
    r_first = mp.r(t[:2])
    w_first = _start_values(pot, m, k, hbar, r_first) / np.sqrt(L * mp.sigma(t[:2]))
    w = _numerov(F, h, float(w_first[0]), float(w_first[1]))

    R = float(mp.r(t[n]))
    gp = L * float(mp.sigma(t[n]))
    gpp = gp * float(mp.one_minus_sigma(t[n]))
    w_t = (w[n - 2] - 8.0 * w[n - 1] + 8.0 * w[n + 1] - w[n + 2]) / (12.0 * h)
    u = math.sqrt(gp) * w[n]
    du = (0.5 * gpp / math.sqrt(gp) * w[n] + math.sqrt(gp) * w_t) / gp

    nu = bessel_order(pot, m, hbar)
    x = k * R
    sr = math.sqrt(R)
    Fv, Gv = sr * jv(nu, x), sr * yv(nu, x)
    dF = jv(nu, x) / (2.0 * sr) + sr * k * jvp(nu, x)
    dG = yv(nu, x) / (2.0 * sr) + sr * k * yvp(nu, x)
    # u = A F + B G = C (cos(d) F - sin(d) G); the Wronskian F G' - F' G is 2/pi
    A = (u * dG - du * Gv) * 0.5 * math.pi
    B = (du * Fv - u * dF) * 0.5 * math.pi
    delta_nu = math.atan2(-B, A)
    delta_nu += _tail_correction(pot, m, k, hbar, nu, R, delta_nu)
    out = {"delta": delta_nu + (abs(m) - nu) * 0.5 * math.pi, "r_match": R}
    if keep:
        amp = math.hypot(A, B) * math.sqrt(2.0 / (math.pi * k))
        out["grid"] = mp.r(t[: n + 1])
        out["u"] = w[: n + 1] * np.sqrt(L * mp.sigma(t[: n + 1])) / amp
    return out


def _unwrap_to(x: float, ref: float) -> float:
    return ref + reduce_mod_pi(x - ref)


def solve_radial(
    pot: PotentialModel,
    m: int,
    k_wave: float,
    hbar: float,
    mesh: MeshSpec = MeshSpec(),
) -> RadialSolution:
    """Regular solution of the radial equation and the exact phase shift."""
    if not k_wave > 0:
        raise DomainError("k_wave must be positive")
    if not hbar > 0:
        raise DomainError("hbar must be positive")
    if int(m) != m:
        raise DomainError("m must be an integer")
    m = int(m)
    if m == 0 and not pot.is_free and math.isclose(k_wave * hbar, pot.p_c, rel_tol=1e-12, abs_tol=0.0):
        raise DomainError("the singular point (0, p_c/hbar) is excluded")
    deltas = []
    extrap = []
    last = None
    for level in range(mesh.max_halvings + 1):
        keep = level >= 2
        res = _phase_once(pot, m, k_wave, hbar, mesh, level, keep=keep)
        d = res["delta"] if not deltas else _unwrap_to(res["delta"], deltas[-1])
        deltas.append(d)
        if len(deltas) >= 2:
            # Numerov's global error is O(h^4)
            extrap.append((16.0 * deltas[-1] - deltas[-2]) / 15.0)
        if len(extrap) >= 2:
            err = abs(extrap[-1] - extrap[-2])
            last = res
            if err <= mesh.tol:
                break
    else:
        raise ConvergenceError(
            f"phase shift for m={m}, k={k_wave} not converged under step halving (err={err:.2e})",
            reduce_mod_pi(extrap[-1]), err,
        )
    return RadialSolution(
        m=m, k_wave=float(k_wave), grid=last["grid"], u=last["u"],
        delta_exact=reduce_mod_pi(extrap[-1]), err_estimate=err,
        r_match=last["r_match"], hbar=hbar, mu=pot.mu,
    )


@dataclass(frozen=True)
class ComparisonRow:
    m: int
    k: float
    delta_wkb: float
    delta_exact: float
    abs_err: float
    rel_err: float  # nan where |delta_exact| <= 0.05

    def as_tuple(self) -> tuple:
        return (self.m, self.k, self.delta_wkb, self.delta_exact, self.abs_err, self.rel_err)


def compare_wkb(
    pot: PotentialModel,
    m_list: Iterable[int],
    k_list: Iterable[float],
    hbar: float,
    quad: QuadratureSpec = QuadratureSpec(),
    mesh: MeshSpec = MeshSpec(),
    min_phase: float = 0.05,
) -> list[ComparisonRow]:
    """WKB against exact phase shifts on the product grid ``m_list x k_list``.

    ``delta_wkb`` is the continuous semiclassical phase ``dW / (2 hbar)``; the
    exact phase, known only modulo pi, is reported as the representative
    nearest to it.  ``rel_err`` is the error relative to that aligned phase
    and is left as nan where ``|delta_exact| <= min_phase``.
    """
    ks = [float(k) for k in k_list]
    rows = []
    for m in m_list:
        for k in ks:
            pt = ScatterPoint(m * hbar, k * hbar)
            if pt.is_critical(pot):
                raise DomainError("comparison grid contains the singular point")
            wkb = delta_w(pot, pt, quad).value / (2.0 * hbar)
            exact = _unwrap_to(solve_radial(pot, m, k, hbar, mesh).delta_exact, wkb)
            err = abs(exact - wkb)
            rel = err / abs(exact) if abs(exact) > min_phase else math.nan
            rows.append(ComparisonRow(int(m), k, wkb, exact, err, rel))
    return rows
