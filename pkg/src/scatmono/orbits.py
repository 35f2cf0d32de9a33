"""Classical scattering: deflection angles and their holonomy around (0, p_c).

Sign convention: the deflection ``dphi`` is the counter-clockwise rotation
of the velocity from the incoming to the outgoing direction, which equals
``phi - sgn(l) pi`` (swept polar angle minus its free value) and
``-d dW / dl``.  A particle with ``l > 0`` passes the origin on the right
(``x > 0``) while moving up, is pushed to the right, and has ``dphi < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .actions import d_delta_w_dl
from .potential import ConvergenceError, DomainError, PotentialModel, ScatterPoint, turning_point
from .quadrature import QuadratureSpec, sqrt_endpoint_integral, tail_integral

__all__ = [
    "Trajectory",
    "LoopPath",
    "HolonomyReport",
    "deflection_integral",
    "far_radius",
    "integrate_orbit",
    "loop_holonomy",
    "holonomy_report",
    "rectangle",
]


@dataclass(frozen=True)
class Trajectory:
    """Sampled planar orbit; ``samples`` has columns ``t, x, y, px, py``."""

    samples: np.ndarray
    l: float
    e: float
    deflection: float
    mu: float = 1.0

    @property
    def final_direction(self) -> str:
        return "-y" if self.samples[-1, 2] < 0 else "+y"

    def energies(self, pot: PotentialModel) -> np.ndarray:
        _, x, y, px, py = self.samples.T
        return (px * px + py * py) / (2.0 * self.mu) + pot.V(np.hypot(x, y))

    def angular_momenta(self) -> np.ndarray:
        _, x, y, px, py = self.samples.T
        return x * py - y * px


def deflection_integral(pot: PotentialModel, pt: ScatterPoint, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """``2 int_{r0}^inf l / (r sqrt(2 mu E r^2 - l^2 - 2 mu r^2 V)) dr - sgn(l) pi``."""
    if pt.is_critical(pot):
        raise DomainError("the critical point (0, p_c) is excluded")
    if pt.l == 0:
        raise DomainError("deflection_integral needs l != 0")
    l = pt.l
    two_mu_e = pt.p * pt.p
    two_mu = 2.0 * pot.mu
    r0 = turning_point(pot, pt)
    r_cut = quad.cutoff(r0, pot.length_scale)

    def f(r):
        q = r * r * (two_mu_e - two_mu * float(pot.V(r))) - l * l
        return l / (r * math.sqrt(q)) if q > 0 else 0.0

    inner, e1 = sqrt_endpoint_integral(f, r0, r_cut, quad)
    outer, e2 = tail_integral(f, r_cut, quad)
    if 2.0 * (e1 + e2) > 10.0 * quad.rel_tol * (1.0 + abs(inner + outer)):
        raise ConvergenceError("deflection integral did not converge", 2.0 * (inner + outer), 2.0 * (e1 + e2))
    return 2.0 * (inner + outer) - math.copysign(math.pi, l)


def far_radius(pot: PotentialModel, e: float, rel: float = 1e-12) -> float:
    """Smallest radius beyond which ``|V| < rel * E``."""
    if pot.is_free:
        return 10.0 * pot.length_scale
    target = rel * e
    g = lambda r: float(pot.V(r)) - target
    hi = pot.length_scale
    while g(hi) > 0:
        hi *= 2.0
    if hi == pot.length_scale:
        return hi
    return brentq(g, 0.5 * hi, hi, xtol=1e-9 * hi)


def integrate_orbit(
    pot: PotentialModel,
    pt: ScatterPoint,
    r_far: float | None = None,
    rtol: float = 1e-13,
    max_time: float | None = None,
) -> Trajectory:
    """Integrate Newton's equations for a particle coming in from ``y = -inf``.

    The particle starts at ``(l / p0, -R)`` moving in ``+y`` with
    ``|p0| = sqrt(2 mu (E - V(start)))`` so energy and angular momentum are
    exactly ``E`` and ``l``.  Integration stops when it leaves the disc of
    radius ``R`` again.
    """
    if pt.is_critical(pot):
        raise DomainError("the critical point (0, p_c) is excluded")
    mu = pot.mu
    e = pt.energy(mu)
    R = r_far if r_far is not None else far_radius(pot, e)
    p0 = math.sqrt(2.0 * mu * (e - float(pot.V(R))))
    x0 = pt.l / p0
    start = np.array([x0, -R, 0.0, p0])
    if max_time is None:
        # free crossing time times a generous margin for slowing near the bump
        max_time = 50.0 * (2.0 * R * mu / pt.p) + 1e4 * pot.length_scale * mu / pt.p

    def rhs(_, s):
        x, y, px, py = s
        r = math.hypot(x, y)
        # -V'(r) x / r with a regular limit at the origin
        g = -float(pot.dV(r)) / r if r > 0 else -float(pot.d2V(0.0))
        return [px / mu, py / mu, g * x, g * y]

    def leaving(_, s):
        return math.hypot(s[0], s[1]) - R

    leaving.terminal = True
    leaving.direction = 1.0

    sol = solve_ivp(rhs, (0.0, max_time), start, method="DOP853", rtol=rtol,
                    atol=1e-14 * max(1.0, p0), events=leaving)
    if sol.status == -1:
        raise ConvergenceError(f"orbit integration failed: {sol.message}")
    if sol.status != 1:
        raise RuntimeError("particle did not escape within the time limit")
    samples = np.column_stack([sol.t, sol.y.T])
    vx, vy = samples[-1, 3], samples[-1, 4]
    # incoming velocity is (0, p0); rotation angle in (-pi, pi]
    cross = p0 * (0.0 * vy - vx) + 0.0
    dot = p0 * vy
    deflection = math.atan2(cross, dot)
    return Trajectory(samples, pt.l, e, deflection, mu)


@dataclass(frozen=True)
class LoopPath:
    """Polygonal path in the ``(l, p)`` plane."""

    waypoints: tuple[tuple[float, float], ...]
    closed: bool = True
    samples_per_leg: int = 40

    def __post_init__(self) -> None:
        object.__setattr__(self, "waypoints", tuple((float(l), float(p)) for l, p in self.waypoints))
        if len(self.waypoints) < 2:
            raise ValueError("a path needs at least two waypoints")
        if self.samples_per_leg < 2:
            raise ValueError("samples_per_leg must be >= 2")

    def legs(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        pts = list(self.waypoints)
        if self.closed and pts[0] != pts[-1]:
            pts.append(pts[0])
        return list(zip(pts[:-1], pts[1:]))

    def sample(self) -> np.ndarray:
        """Points along the path; the closing point repeats the first one."""
        out = [self.legs()[0][0]]
        for (l0, p0), (l1, p1) in self.legs():
            t = np.linspace(0.0, 1.0, self.samples_per_leg + 1)[1:]
            out.extend(zip(l0 + t * (l1 - l0), p0 + t * (p1 - p0)))
        return np.array(out, dtype=float)

    def reversed(self) -> "LoopPath":
        return LoopPath(tuple(reversed(self.waypoints)), self.closed, self.samples_per_leg)

    def winding_number(self, center: tuple[float, float]) -> int:
        pts = self.sample()
        ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
        turn = np.diff(ang)
        turn = (turn + np.pi) % (2.0 * np.pi) - np.pi
        return int(round(turn.sum() / (2.0 * np.pi)))

    def passes_through(self, point: tuple[float, float], tol: float = 1e-12) -> bool:
        px, py = point
        for (l0, p0), (l1, p1) in self.legs():
            dl, dp = l1 - l0, p1 - p0
            n2 = dl * dl + dp * dp
            t = 0.0 if n2 == 0 else min(1.0, max(0.0, ((px - l0) * dl + (py - p0) * dp) / n2))
            if math.hypot(l0 + t * dl - px, p0 + t * dp - py) <= tol * max(1.0, abs(py)):
                return True
        return False


def rectangle(l_min: float, l_max: float, p_min: float, p_max: float, samples_per_leg: int = 40) -> LoopPath:
    """Counter-clockwise rectangle starting at its lower-right corner."""
    return LoopPath(((l_max, p_min), (l_max, p_max), (l_min, p_max), (l_min, p_min)), True, samples_per_leg)


@dataclass
class HolonomyReport:
    path: LoopPath
    holonomy: float
    winding: int
    crossings: list[dict] = field(default_factory=list)
    track: list[tuple[float, float, float]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "path": [list(w) for w in self.path.waypoints],
            "holonomy": self.holonomy,
            "winding": self.winding,
            "crossings": self.crossings,
        }


def holonomy_report(pot: PotentialModel, path: LoopPath, quad: QuadratureSpec = QuadratureSpec()) -> HolonomyReport:
    """Track ``dphi = -d dW/dl`` continuously along ``path``.

    ``dphi`` is smooth everywhere except on ``l = 0`` below the barrier,
    where it jumps by ``2 pi``; there the continuation switches to the
    smoothed branch (``dW - 2 pi l``), which is smooth for ``p < p_c``.
    Above the barrier the raw branch is already smooth.
    """
    crit = (0.0, pot.p_c)
    if not path.closed:
        raise DomainError("holonomy needs a closed path")
    if path.passes_through(crit):
        raise DomainError("path passes through the critical point")
    pts = [tuple(q) for q in path.sample() if q[0] != 0.0]
    vals = [-d_delta_w_dl(pot, ScatterPoint(l, p), quad).value for l, p in pts]

    total = 0.0
    crossings = []
    track = [(pts[0][0], pts[0][1], vals[0])]
    running = vals[0]
    for (l0, p0), (l1, p1), v0, v1 in zip(pts[:-1], pts[1:], vals[:-1], vals[1:]):
        step = v1 - v0
        if (l0 > 0) != (l1 > 0):
            p_cross = p0 + (p1 - p0) * (0.0 - l0) / (l1 - l0)
            if (p0 - pot.p_c) * (p1 - pot.p_c) <= 0:
                raise DomainError("l = 0 crossing too close to p_c; raise samples_per_leg")
            if p_cross < pot.p_c:
                # dphi(0+) = -pi, dphi(0-) = +pi below the barrier
                step -= math.copysign(2.0 * math.pi, l0)
                branch = "smoothed"
            else:
                branch = "raw"
            crossings.append({"p": p_cross, "p_region": "below" if p_cross < pot.p_c else "above",
                              "branch_used": branch, "direction": "+to-" if l0 > 0 else "-to+"})
        if abs(step) > 0.5 * math.pi:
            raise ConvergenceError(
                f"deflection jumps by {step:.3f} between samples near l={l0:.4g}, p={p0:.4g}; "
                "raise samples_per_leg"
            )
        total += step
        running += step
        track.append((l1, p1, running))
    return HolonomyReport(path, total, path.winding_number(crit), crossings, track)


def loop_holonomy(pot: PotentialModel, path: LoopPath, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Total change of the continuously tracked deflection angle after one circuit."""
    return holonomy_report(pot, path, quad).holonomy
