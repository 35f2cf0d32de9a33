"""Lattice of zeros of the phase shift mod pi and its monodromy.

With ``l = m hbar`` and ``p = k hbar`` the WKB phase shift is
``delta = pi N(m, k)`` where ``N = dW / (2 pi hbar)``.  Zeros of ``delta``
mod pi are the points of integer ``m`` where ``N`` is an integer; ``N`` is
the *raw label* of a zero.  On the smoothed branch the label is
``N - max(m, 0)``.

Cells are transported geometrically: a step extrapolates the cell edges by
one lattice vector and snaps every new vertex to the nearest zero in its
column.  Labels are only read off afterwards, to express the final basis in
terms of the initial one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from .actions import delta_w, reduce_mod_pi
from .orbits import LoopPath
from .potential import DomainError, PotentialModel, ScatterPoint
from .quadrature import QuadratureSpec
from .quantum import solve_radial

__all__ = [
    "LatticeError",
    "LatticePoint",
    "LatticeCell",
    "MonodromyMatrix",
    "TransportResult",
    "ZeroLattice",
    "zero_curves",
    "make_cell",
    "transport_cell",
]

log = logging.getLogger(__name__)

Branch = Literal["raw", "smoothed"]


class LatticeError(RuntimeError):
    """Cell stepping could not pick a unique neighbouring zero."""


@dataclass(frozen=True, order=True)
class LatticePoint:
    m: int
    k: float
    n: int
    branch: Branch = "raw"

    def label(self, branch: Branch = "raw") -> int:
        raw = self.n if self.branch == "raw" else self.n + max(self.m, 0)
        return raw if branch == "raw" else raw - max(self.m, 0)

    def to_json(self) -> dict:
        return {"m": self.m, "k": self.k, "n": self.n, "branch": self.branch}


@dataclass(frozen=True)
class LatticeCell:
    """Four zeros ``base, base+u, base+v, base+u+v``.

    ``u`` and ``v`` are integer steps in raw-label coordinates ``(dm, dN)``.
    """

    vertices: tuple[LatticePoint, LatticePoint, LatticePoint, LatticePoint]
    u: tuple[int, int]
    v: tuple[int, int]

    def __post_init__(self) -> None:
        det = self.u[0] * self.v[1] - self.u[1] * self.v[0]
        if abs(det) != 1:
            raise DomainError(f"cell basis must be unimodular, det={det}")

    @property
    def center(self) -> tuple[float, float]:
        return (sum(p.m for p in self.vertices) / 4.0, sum(p.k for p in self.vertices) / 4.0)

    def to_json(self) -> dict:
        return {"vertices": [p.to_json() for p in self.vertices], "u": list(self.u), "v": list(self.v)}


@dataclass(frozen=True)
class MonodromyMatrix:
    """Integer matrix ``M`` with ``[u' v'] = [u v] M`` (columns are coordinates)."""

    entries: tuple[tuple[int, int], tuple[int, int]]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=int)

    @property
    def det(self) -> int:
        (a, b), (c, d) = self.entries
        return a * d - b * c

    def is_identity(self) -> bool:
        return self.entries == ((1, 0), (0, 1))

    def is_unipotent(self) -> bool:
        n = self.array - np.eye(2, dtype=int)
        return self.det == 1 and not np.any(n @ n)

    def inverse(self) -> "MonodromyMatrix":
        (a, b), (c, d) = self.entries
        s = self.det
        return MonodromyMatrix(((d * s, -b * s), (-c * s, a * s)))

    def to_json(self) -> list[list[int]]:
        return [list(row) for row in self.entries]


class ZeroLattice:
    """Lazily computed zeros of ``delta`` mod pi, one integer-``m`` column at a time."""

    def __init__(
        self,
        pot: PotentialModel,
        hbar: float,
        k_range: tuple[float, float],
        quad: QuadratureSpec = QuadratureSpec(),
        dk: float = 0.25,
        phase: Literal["wkb", "quantum"] = "wkb",
    ):
        if phase not in ("wkb", "quantum"):
            raise ValueError(f"unknown phase source {phase!r}")
        if not hbar > 0:
            raise DomainError("hbar must be positive")
        if not 0 < k_range[0] < k_range[1]:
            raise DomainError("k range must be positive and increasing")
        self.pot = pot
        self.hbar = hbar
        self.k_range = (float(k_range[0]), float(k_range[1]))
        self.quad = quad
        self.dk = dk
        self.phase = phase
        self._columns: dict[int, list[LatticePoint]] = {}

    @property
    def k_critical(self) -> float:
        return self.pot.p_c / self.hbar

    def label_function(self, m: int, k: float) -> float:
        """``N(m, k) = delta / pi`` with ``delta = dW(m hbar, k hbar) / (2 hbar)``.

        With ``phase="quantum"`` the exact phase shift is used, taken modulo
        pi nearest to the WKB value so that ``N`` stays continuous.
        """
        pt = ScatterPoint(m * self.hbar, k * self.hbar)
        if pt.is_critical(self.pot):
            raise DomainError("the singular point (0, p_c/hbar) is excluded")
        delta = delta_w(self.pot, pt, self.quad).value / (2.0 * self.hbar)
        if self.phase == "quantum":
            exact = solve_radial(self.pot, m, k, self.hbar).delta_exact
            delta += reduce_mod_pi(exact - delta)
        return delta / math.pi

    def _safe_label(self, m: int, k: float) -> float:
        if m == 0 and math.isclose(k * self.hbar, self.pot.p_c, rel_tol=1e-12, abs_tol=0.0):
            k = k * (1.0 + 1e-9)
        return self.label_function(m, k)

    def column(self, m: int) -> list[LatticePoint]:
        if m not in self._columns:
            self._columns[m] = self._solve_column(m)
        return self._columns[m]

    def _solve_column(self, m: int) -> list[LatticePoint]:
        lo, hi = self.k_range
        n_grid = max(2, int(math.ceil((hi - lo) / self.dk)) + 1)
        ks = np.linspace(lo, hi, n_grid)
        fs = [self._safe_label(m, float(k)) for k in ks]
        out = []
        for (k0, f0), (k1, f1) in zip(zip(ks[:-1], fs[:-1]), zip(ks[1:], fs[1:])):
            a, b = sorted((f0, f1))
            for n in range(math.ceil(a), math.floor(b) + 1):
                if n == f0 and k0 != lo:
                    continue  # already found as the right end of the previous interval
                if n == f0:
                    root = float(k0)
                elif n == f1:
                    root = float(k1)
                else:
                    g = lambda k, n=n: self._safe_label(m, k) - n
                    root = brentq(g, float(k0), float(k1), xtol=1e-11, rtol=1e-14)
                out.append(LatticePoint(m, root, n, "raw"))
        out.sort(key=lambda q: q.k)
        return out

    def nearest(self, m: int, k_pred: float) -> LatticePoint:
        """Zero of column ``m`` nearest to ``k_pred``; ties are an error."""
        col = self.column(m)
        if len(col) < 2:
            raise LatticeError(f"column m={m} has fewer than two zeros in k range {self.k_range}")
        dist = sorted((abs(q.k - k_pred), i) for i, q in enumerate(col))
        best_d, best_i = dist[0]
        second_d = dist[1][0]
        gap = best_d + second_d
        # beyond the last computed zero the next one may simply be missing
        edge_gap = abs(col[1].k - col[0].k) if best_i == 0 else abs(col[-1].k - col[-2].k)
        if best_i in (0, len(col) - 1) and (k_pred - col[best_i].k) * (1 if best_i else -1) > 0.3 * edge_gap:
            raise LatticeError(f"prediction k={k_pred:.4f} in column m={m} is outside the computed k range")
        # the prediction has to sit clearly closer to one zero than to any other
        if best_d > 0.3 * gap:
            raise LatticeError(
                f"ambiguous step in column m={m}: nearest zeros at distances {best_d:.4f} and {second_d:.4f}"
            )
        return col[best_i]


def zero_curves(
    pot: PotentialModel,
    hbar: float,
    m_range: tuple[int, int],
    k_range: tuple[float, float],
    quad: QuadratureSpec = QuadratureSpec(),
    branch: Branch = "raw",
) -> list[LatticePoint]:
    """All zeros of ``delta(m hbar, k hbar)`` mod pi with ``m`` in ``m_range`` (inclusive)."""
    lat = ZeroLattice(pot, hbar, k_range, quad)
    out = []
    for m in range(int(m_range[0]), int(m_range[1]) + 1):
        try:
            col = lat.column(m)
        except (RuntimeError, DomainError) as exc:
            log.warning("column m=%d failed: %s", m, exc)
            continue
        if branch == "smoothed":
            col = [LatticePoint(q.m, q.k, q.label("smoothed"), "smoothed") for q in col]
        out.extend(col)
    return out


def _find(lat: ZeroLattice, m: int, n: int) -> LatticePoint:
    for q in lat.column(m):
        if q.n == n:
            return q
    raise LatticeError(f"no zero with raw label {n} in column m={m}")


def make_cell(lat: ZeroLattice, m: int, n: int) -> LatticeCell:
    """Unit cell with base at raw label ``(m, n)`` and basis ``u=(1,0)``, ``v=(0,1)``."""
    verts = (_find(lat, m, n), _find(lat, m + 1, n), _find(lat, m, n + 1), _find(lat, m + 1, n + 1))
    return LatticeCell(verts, (1, 0), (0, 1))


def _cell_from_vertices(verts) -> LatticeCell:
    p00, p10, p01, _ = verts
    u = (p10.m - p00.m, p10.n - p00.n)
    v = (p01.m - p00.m, p01.n - p00.n)
    return LatticeCell(tuple(verts), u, v)


@dataclass
class TransportResult:
    start: LatticeCell
    final: LatticeCell
    matrix: MonodromyMatrix
    winding: int
    crossings: list[dict] = field(default_factory=list)
    steps: int = 0

    def to_json(self) -> dict:
        return {
            "start_cell": self.start.to_json(),
            "final_cell": self.final.to_json(),
            "matrix": self.matrix.to_json(),
            "winding": self.winding,
            "crossings": self.crossings,
            "steps": self.steps,
        }


class _Stepper:
    def __init__(self, lat: ZeroLattice, cell: LatticeCell):
        self.lat = lat
        self.v = list(cell.vertices)  # p00, p10, p01, p11
        self.steps = 0
        self.crossings: list[dict] = []
        self.path: list[tuple[float, float]] = []
        # the carried basis is (current u, v) @ T; reductions update T
        self.T = np.eye(2, dtype=int)
        # fixed metric: k measured in units of the starting row spacing
        self.scale = np.array([1.0, 1.0 / self._spacing()])

    def _edge(self, a: LatticePoint, b: LatticePoint) -> tuple[int, float]:
        return b.m - a.m, b.k - a.k

    def _spacing(self) -> float:
        p00, p10, p01, p11 = self.v
        d = [abs(p01.k - p00.k), abs(p11.k - p10.k)]
        return max(min(d), 1e-6)

    def _extend(self, a: LatticePoint, b: LatticePoint, made: list) -> LatticePoint:
        dm, dk = self._edge(a, b)
        if dm == 0:
            # within a column the neighbour is simply the next zero
            col = self.lat.column(b.m)
            i = col.index(b) + (1 if dk > 0 else -1)
            if not 0 <= i < len(col):
                raise LatticeError(f"column m={b.m} has no zero beyond k={b.k:.4f}; widen the k range")
            c = col[i]
        else:
            c = self.lat.nearest(b.m + dm, b.k + dk)
        made.append((a, b, c))
        return c

    def _apply(self, new: list, made: list) -> None:
        self._check_crossings(made)
        self.v = new
        self.steps += 1
        if self.steps > 100000:
            raise LatticeError("cell transport did not terminate")

    def step(self, direction: str) -> None:
        p00, p10, p01, p11 = self.v
        ext = self._extend
        made: list = []
        if direction == "+u":
            new = [p10, ext(p00, p10, made), p11, ext(p01, p11, made)]
        elif direction == "-u":
            new = [ext(p10, p00, made), p00, ext(p11, p01, made), p01]
        elif direction == "+v":
            new = [p01, p11, ext(p00, p01, made), ext(p10, p11, made)]
        elif direction == "-v":
            new = [ext(p01, p00, made), ext(p11, p10, made), p00, p10]
        else:
            raise ValueError(direction)
        self._apply(new, made)

    # basis changes: new (u, v) = old (u, v) @ S, in two placements each
    _SHEARS = {
        "u+v": ((1, 0), (1, 1)),
        "u-v": ((1, 0), (-1, 1)),
        "v+u": ((1, 1), (0, 1)),
        "v-u": ((1, -1), (0, 1)),
    }

    def _sheared(self, kind: str, placement: int, made: list) -> list:
        p00, p10, p01, p11 = self.v
        ext = self._extend
        if kind == "u+v":
            return [p00, p11, p01, ext(p10, p11, made)] if placement == 0 else [ext(p01, p00, made), p10, p00, p11]
        if kind == "u-v":
            return [p01, p10, ext(p00, p01, made), p11] if placement == 0 else [p00, ext(p11, p10, made), p01, p10]
        if kind == "v+u":
            return [p00, p10, p11, ext(p01, p11, made)] if placement == 0 else [ext(p10, p00, made), p00, p01, p11]
        if kind == "v-u":
            return [p10, ext(p00, p10, made), p01, p11] if placement == 0 else [p00, p10, ext(p11, p01, made), p01]
        raise ValueError(kind)

    def shear(self, kind: str, target: np.ndarray | None = None) -> None:
        """Change basis in place; of the two placements the one whose centre
        is nearer ``target`` is kept."""
        options = []
        for placement in (0, 1):
            made: list = []
            try:
                new = self._sheared(kind, placement, made)
            except LatticeError:
                continue
            c = np.array([sum(q.m for q in new) / 4.0, sum(q.k for q in new) / 4.0])
            d = 0.0 if target is None else float(np.linalg.norm((target - c) * self.scale))
            options.append((d, placement, new, made))
        if not options:
            raise LatticeError(f"no unique neighbour for the {kind} basis change")
        _, _, new, made = min(options, key=lambda o: (o[0], o[1]))
        self._apply(new, made)
        S = np.array(self._SHEARS[kind], dtype=int)
        Sinv = np.array([[S[1, 1], -S[0, 1]], [-S[1, 0], S[0, 0]]], dtype=int)
        # the carried basis stays fixed: old @ T == new @ (S^-1 T)
        self.T = Sinv @ self.T

    def reduce(self, target: np.ndarray | None = None) -> None:
        """Replace the longer edge while a shear makes it shorter."""
        for _ in range(20):
            U, V = (w * self.scale for w in self.basis())
            nu, nv = np.linalg.norm(U), np.linalg.norm(V)
            if nu >= nv:
                options = {"u+v": np.linalg.norm(U + V), "u-v": np.linalg.norm(U - V)}
            else:
                options = {"v+u": np.linalg.norm(V + U), "v-u": np.linalg.norm(V - U)}
            kind = min(options, key=options.get)
            if not options[kind] < 0.99 * max(nu, nv):
                return
            saved = (list(self.v), len(self.crossings), self.T.copy())
            try:
                self.shear(kind, target)
            except LatticeError:
                self.v, self.T = saved[0], saved[2]
                del self.crossings[saved[1]:]
                return

    def _check_crossings(self, made) -> None:
        # an edge extrapolated through column 0 shows which branch is smooth there
        for a, mid, b in made:
            if not (mid.m == 0 and a.m != 0 and (a.m > 0) != (b.m > 0)):
                continue
            raw_keep = (b.n - mid.n) == (mid.n - a.n)
            smooth_keep = (b.label("smoothed") - mid.label("smoothed")) == (mid.label("smoothed") - a.label("smoothed"))
            region = "below" if mid.k < self.lat.k_critical else "above"
            branch = "smoothed" if smooth_keep and not raw_keep else "raw" if raw_keep and not smooth_keep else "ambiguous"
            expected = "smoothed" if region == "below" else "raw"
            if branch != expected:
                raise LatticeError(
                    f"continuation through m=0 at k={mid.k:.4f} followed the {branch} branch, expected {expected}"
                )
            self.crossings.append({"k": mid.k, "p_region": region, "branch_used": branch})

    def center(self) -> np.ndarray:
        return np.array([sum(q.m for q in self.v) / 4.0, sum(q.k for q in self.v) / 4.0])

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        p00, p10, p01, p11 = self.v
        U = 0.5 * (np.array(self._edge(p00, p10)) + np.array(self._edge(p01, p11)))
        V = 0.5 * (np.array(self._edge(p00, p01)) + np.array(self._edge(p10, p11)))
        return U, V

    def move_towards(self, target: np.ndarray) -> bool:
        """Take the lattice step that brings the cell centre closest to
        ``target`` (an ``(m, k)`` point); False when no step helps."""
        U, V = self.basis()

        def dist(c):
            return float(np.linalg.norm((target - c) * self.scale))

        c = self.center()
        here = dist(c)
        moves = {"+u": c + U, "-u": c - U, "+v": c + V, "-v": c - V}
        for mv in sorted(moves, key=lambda mv: (dist(moves[mv]), mv)):
            if dist(moves[mv]) >= here - 1e-9:
                break
            saved = (list(self.v), len(self.crossings), self.T.copy())
            try:
                self.step(mv)
            except LatticeError:
                pass
            else:
                if dist(self.center()) < here - 1e-9:
                    self.path.append(tuple(self.center()))
                    return True
            # the real lattice disagreed with the linear prediction
            self.v, self.T = saved[0], saved[2]
            del self.crossings[saved[1]:]
        return False


def transport_cell(
    pot: PotentialModel,
    hbar: float,
    start_cell: LatticeCell | tuple[int, int],
    loop: LoopPath,
    quad: QuadratureSpec = QuadratureSpec(),
    lattice: ZeroLattice | None = None,
) -> TransportResult:
    """Carry a unit cell once around ``loop`` (given in the ``(l, p)`` plane).

    The cell centre is stepped one lattice vector at a time to the loop's
    first sample, through all samples, and back to where it started.  Along
    the way the cell is kept reduced by unimodular basis changes, which are
    undone at the end.  The monodromy matrix expresses the carried basis in
    the starting one.
    Passing ``(m, n)`` builds the raw-label unit cell at that base.
    """
    crit = (0.0, pot.p_c)
    if loop.passes_through(crit):
        raise DomainError("loop passes through the singular column point")
    samples = loop.sample()
    mk = np.column_stack([samples[:, 0] / hbar, samples[:, 1] / hbar])
    if lattice is None:
        k_lo = max(0.5 * mk[:, 1].min(), 1e-3)
        k_hi = mk[:, 1].max() * 1.5
        lattice = ZeroLattice(pot, hbar, (k_lo, k_hi), quad)
    if not isinstance(start_cell, LatticeCell):
        start_cell = make_cell(lattice, *start_cell)

    stepper = _Stepper(lattice, start_cell)
    start_center = np.array(start_cell.center)
    def walk(target):
        while stepper.move_towards(target):
            pass
        stepper.reduce(target)
        while stepper.move_towards(target):
            pass
        # remaining offset in units of the local cell edges
        miss = float(np.abs(np.linalg.solve(np.column_stack(stepper.basis()), target - stepper.center())).max())
        if miss > 1.5:
            raise LatticeError(f"cell got stuck {miss:.2f} cells away from ({target[0]:.3g}, {target[1]:.3g})")

    # walk out to the loop, go round, and retrace the way out (a lasso has the loop's winding)
    walk(mk[0])
    way_out = list(stepper.path)
    for target in mk[1:]:
        walk(target)
    for target in [*reversed(way_out), start_center]:
        walk(np.asarray(target))

    final = _cell_from_vertices(stepper.v)
    B0 = np.array([start_cell.u, start_cell.v]).T
    B1 = np.array([final.u, final.v]).T @ stepper.T
    M = np.rint(np.linalg.solve(B0, B1)).astype(int)
    matrix = MonodromyMatrix(((int(M[0, 0]), int(M[0, 1])), (int(M[1, 0]), int(M[1, 1]))))
    return TransportResult(start_cell, final, matrix, loop.winding_number(crit), stepper.crossings, stepper.steps)
