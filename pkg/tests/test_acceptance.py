"""Acceptance criteria 1-9.

Each criterion is a function returning ``(ok, detail)``.  Under pytest every
criterion is one test and the verdict lines are printed in the terminal
summary; run as a script (``python -m tests.test_acceptance``) the lines go
straight to stdout.
"""

from __future__ import annotations

import math
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from scatmono import (
    LoopPath,
    QuadratureSpec,
    ScatterPoint,
    ZeroLattice,
    compare_wkb,
    d_delta_w_dl,
    delta_w,
    integrate_orbit,
    limit_dl,
    lorentzian,
    loop_holonomy,
    one_sided_slope,
    rectangle,
    reduce_mod_pi,
    transport_cell,
)

try:
    from . import oracles
except ImportError:  # run as a plain script
    import oracles

POT = lorentzian(20.0, 1.0, 1.0)
QUAD = QuadratureSpec()
HBAR = 0.25
P_BELOW = math.sqrt(6.0)
P_ABOVE = 7.0
SEED = 20240611

# results collected for the terminal summary, keyed by criterion number
VERDICTS: dict[int, str] = {}


def _line(n: int, ok: bool, detail: str, elapsed: float) -> str:
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}"


def _regular_points(rng, count):
    """Random (l, p) in [-3, 3] x [1, 9] away from l = 0 and from p_c."""
    out = []
    while len(out) < count:
        l, p = rng.uniform(-3.0, 3.0), rng.uniform(1.0, 9.0)
        if abs(l) > 0.05 and abs(p - POT.p_c) > 0.05:
            out.append(ScatterPoint(float(l), float(p)))
    return out


def criterion_1():
    below = [limit_dl(POT, P_BELOW, s, QUAD).value for s in ("from_below", "from_above")]
    above = [limit_dl(POT, P_ABOVE, s, QUAD).value for s in ("from_below", "from_above")]
    err_below = max(abs(abs(v) - math.pi) for v in below)
    ok = (np.sign(below[0]) == -np.sign(below[1]) and err_below <= 1e-3
          and max(abs(v) for v in above) <= 1e-3)
    detail = (f"p=sqrt6 limits {below[0]:+.9f} {below[1]:+.9f} (max |.|-pi {err_below:.1e}); "
              f"p=7 limits {above[0]:+.1e} {above[1]:+.1e}")
    return ok, detail, 10.0


def criterion_2():
    def jump(p, which):
        hi = one_sided_slope(POT, p, "from_above", which, QUAD).value
        lo = one_sided_slope(POT, p, "from_below", which, QUAD).value
        return hi - lo

    raw_b, raw_a = jump(P_BELOW, "raw"), jump(P_ABOVE, "raw")
    sm_b, sm_a = jump(P_BELOW, "smoothed"), jump(P_ABOVE, "smoothed")
    dev = max(abs(abs(raw_b) - 2 * math.pi), abs(raw_a), abs(sm_b), abs(abs(sm_a) - 2 * math.pi))
    detail = (f"raw jumps {raw_b:+.6f} (p<p_c) {raw_a:+.1e} (p>p_c); "
              f"smoothed {sm_b:+.1e} (p<p_c) {sm_a:+.6f} (p>p_c); max deviation {dev:.1e}")
    return dev <= 1e-3, detail, 30.0


def criterion_3():
    enclosing = rectangle(-1.0, 1.0, 4.0, 9.0, 40)
    h_in = loop_holonomy(POT, enclosing, QUAD)
    h_rev = loop_holonomy(POT, enclosing.reversed(), QUAD)
    h_out = loop_holonomy(POT, rectangle(-1.0, 1.0, 1.0, 5.0, 40), QUAD)
    ok = abs(abs(h_in) - 2 * math.pi) <= 1e-6 and abs(h_out) <= 1e-6 and abs(h_in + h_rev) <= 1e-6
    detail = f"enclosing {h_in:+.10f}, reversed {h_rev:+.10f}, non-enclosing {h_out:+.1e}"
    return ok, detail, 60.0


# trajectories integrated for criterion 4 are re-used by criterion 8
_ORBITS: list = []


def _orbits():
    if not _ORBITS:
        pts = [ScatterPoint(0.0, 2.0), ScatterPoint(0.0, P_ABOVE)]
        pts += _regular_points(np.random.default_rng(SEED), 10)
        _ORBITS.extend((pt, integrate_orbit(POT, pt)) for pt in pts)
    return _ORBITS


def criterion_4():
    orbits = _orbits()
    (_, back), (_, through) = orbits[:2]
    cross = max(abs(tr.deflection + d_delta_w_dl(POT, pt, QUAD).value) for pt, tr in orbits[2:])
    ok = (abs(abs(back.deflection) - math.pi) <= 1e-6 and back.final_direction == "-y"
          and abs(through.deflection) <= 1e-6 and through.final_direction == "+y" and cross <= 1e-5)
    detail = (f"p=2 deflection {back.deflection:+.9f} towards {back.final_direction}; "
              f"p=7 deflection {through.deflection:+.1e} towards {through.final_direction}; "
              f"max |dphi_orbit + dW_l| over 10 points {cross:.1e}")
    return ok, detail, 60.0


def criterion_5():
    lat = ZeroLattice(POT, HBAR, (4.0, 70.0), QUAD)
    loop_a = rectangle(-1.25, 1.25, 4.5, 10.0)
    loop_b = LoopPath(((1.5, 6.3), (0.0, 9.5), (-1.5, 6.3), (0.0, 4.5)))
    loop_0 = rectangle(0.5, 2.2, 4.75, 10.0)
    ma = transport_cell(POT, HBAR, (4, -9), loop_a, QUAD, lat).matrix
    mb = transport_cell(POT, HBAR, (4, -8), loop_b, QUAD, lat).matrix
    m0 = transport_cell(POT, HBAR, (4, -9), loop_0, QUAD, lat).matrix
    off = abs(ma.entries[0][1]) + abs(ma.entries[1][0])
    ok = (ma.is_unipotent() and ma.det == 1 and off == 1 and not ma.is_identity()
          and m0.is_identity() and mb.entries == ma.entries)
    detail = f"rectangle {ma.to_json()}, diamond {mb.to_json()}, winding-0 loop {m0.to_json()}"
    return ok, detail, 300.0


def criterion_6():
    ms = [-9, -5, -2, 1, 3, 6, 10]
    ks = [6.0, 12.0, 18.0, 22.0, 28.0, 34.0]
    rows = compare_wkb(POT, ms, ks, HBAR, QUAD)
    rel = [r.rel_err for r in rows if not math.isnan(r.rel_err)]
    worst_abs = max(r.abs_err for r in rows)
    # the same comparison with both phases first reduced to [-pi/2, pi/2)
    reduced = []
    for r in rows:
        w = reduce_mod_pi(r.delta_wkb)
        e = w + reduce_mod_pi(r.delta_exact - w)
        if abs(e) > 0.05:
            reduced.append(abs(e - w) / abs(e))
    ok = len(rel) >= 20 and max(rel) < 0.01
    detail = (f"{len(rel)} of {len(rows)} points used, max relative error {max(rel):.2e}; "
              f"max absolute error {worst_abs:.2e} rad; "
              f"(relative to the reduced phase: {max(reduced):.2e})")
    return ok, detail, 300.0


def criterion_7():
    pts = _regular_points(np.random.default_rng(SEED + 1), 5)
    v = oracles.lorentzian_v(20.0, 1.0)
    rel = max(abs(delta_w(POT, pt, QUAD).value / float(oracles.delta_w(v, 1.0, pt.l, pt.p)) - 1) for pt in pts)
    h = 1e-4
    fd = 0.0
    for pt in pts:
        num = (delta_w(POT, ScatterPoint(pt.l + h, pt.p), QUAD).value
               - delta_w(POT, ScatterPoint(pt.l - h, pt.p), QUAD).value) / (2 * h)
        fd = max(fd, abs(d_delta_w_dl(POT, pt, QUAD).value - num))
    ok = rel <= 1e-8 and fd <= 1e-6
    detail = f"max relative deviation from oracle {rel:.1e}; max |dW_l - finite difference| {fd:.1e}"
    return ok, detail, math.inf


def criterion_8():
    worst_e = worst_l = 0.0
    for pt, tr in _orbits():
        e = tr.energies(POT)
        worst_e = max(worst_e, float(np.max(np.abs(e - tr.e))) / tr.e)
        # head-on orbits have l = 0; their scale is p times the potential's range
        scale = abs(pt.l) if pt.l != 0 else pt.p * POT.length_scale
        worst_l = max(worst_l, float(np.max(np.abs(tr.angular_momenta() - pt.l))) / scale)
    ok = worst_e <= 1e-8 and worst_l <= 1e-8
    detail = f"{len(_orbits())} trajectories, max relative drift energy {worst_e:.1e}, angular momentum {worst_l:.1e}"
    return ok, detail, math.inf


RECIPES = {
    "portrait": ["action", "--l", "1", "--p", "2.449489742783178", "--portrait"],
    "action-raw": ["grid", "--which", "raw", "--lmin", "-3", "--lmax", "3", "--pmin", "1", "--pmax", "9",
                   "--nl", "121", "--np", "161"],
    "action-smoothed": ["grid", "--which", "smoothed", "--lmin", "-3", "--lmax", "3", "--pmin", "1",
                        "--pmax", "9", "--nl", "121", "--np", "161"],
    "zero-lattice": ["lattice", "--mmin", "-12", "--mmax", "12", "--kmin", "4", "--kmax", "36"],
    "loop-orbits": ["orbit", "--l", "1.25,0,-1.25,0", "--p", "6.3,10,6.3,4.5"],
    "loop": ["loop"],
    "transport": ["transport"],
    "verify": ["verify"],
    "info": ["info"],
}


def criterion_9():
    changed = []
    with tempfile.TemporaryDirectory() as tmp:
        for name, argv in RECIPES.items():
            outputs = []
            for run in range(2):
                path = Path(tmp) / f"{name}-{run}"
                subprocess.run([sys.executable, "-m", "scatmono.cli", *argv, "--quiet", "--out", str(path)],
                               check=True)
                outputs.append(path.read_bytes())
            if outputs[0] != outputs[1] or not outputs[0]:
                changed.append(name)
    detail = f"{len(RECIPES) - len(changed)} of {len(RECIPES)} recipes byte-identical"
    if changed:
        detail += f"; differing: {', '.join(changed)}"
    return not changed, detail, math.inf


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 10)}


def evaluate(n: int) -> tuple[bool, str]:
    t0 = time.perf_counter()
    ok, detail, budget = CRITERIA[n]()
    elapsed = time.perf_counter() - t0
    if elapsed > budget:
        ok = False
        detail += f"; over the {budget:.0f} s budget"
    line = _line(n, ok, detail, elapsed)
    VERDICTS[n] = line
    return ok, line


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n):
    ok, line = evaluate(n)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for n in CRITERIA:
        ok, line = evaluate(n)
        failed += not ok
        print(line, flush=True)
    sys.exit(1 if failed else 0)
