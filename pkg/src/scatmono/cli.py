"""Command-line front end.

Every subcommand maps onto one library operation and writes plot-ready CSV
or JSON to stdout (or ``--out``).  Options may also come from a flat
``key = value`` config file (``--config``); flags given on the command line
win.  Exit status: 0 success, 1 domain error, 2 numerical failure, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import actions, lattice, orbits, quantum
from .potential import ConvergenceError, DomainError, PotentialModel, ScatterPoint, lorentzian, zero_potential
from .quadrature import QuadratureSpec

log = logging.getLogger("scatmono")

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 64

# sample of the lattice window (m in [-12, 12], k in [4, 36] at hbar = 0.25) used by `verify`
VERIFY_M = "-9,-5,-2,1,3,6,10"
VERIFY_K = "6,12,18,22,28,34"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


# (flag, type, default, help); default None means "required unless noted"
Opt = tuple[str, Callable, Any, str]

COMMON: list[Opt] = [
    ("potential", str, "lorentzian", "lorentzian or zero"),
    ("a", float, 20.0, "Lorentzian height"),
    ("b", float, 1.0, "Lorentzian inverse width"),
    ("mu", float, 1.0, "reduced mass"),
    ("hbar", float, 0.25, "Planck constant"),
    ("rel-tol", float, 1e-10, "quadrature relative tolerance"),
    ("abs-tol", float, 1e-12, "quadrature absolute tolerance"),
    ("r-cut", float, math.nan, "quadrature split radius (default: automatic)"),
    ("format", str, "", "csv or json (default depends on the command)"),
    ("out", str, "", "write to this file instead of stdout"),
]

COMMANDS: dict[str, tuple[str, list[Opt]]] = {
    "info": ("barrier data e_c, p_c, alpha", []),
    "action": ("radial action difference dW, or the phase portrait with --portrait", [
        ("l", float, None, "angular momentum"),
        ("p", float, math.nan, "asymptotic momentum"),
        ("e", float, math.nan, "energy (alternative to --p)"),
        ("portrait", bool, False, "emit r, p_r curves instead"),
        ("rmax", float, 6.0, "portrait radius range"),
        ("nr", int, 400, "portrait samples"),
    ]),
    "dwdl": ("d dW / dl, or its one-sided limit at l = 0 with --limit", [
        ("l", float, math.nan, "angular momentum"),
        ("p", float, None, "asymptotic momentum"),
        ("limit", str, "", "from_below or from_above"),
    ]),
    "smoothed": ("smoothed branch dW - 2 pi l (l > 0)", [
        ("l", float, None, "angular momentum"),
        ("p", float, None, "asymptotic momentum"),
    ]),
    "phase": ("WKB phase shift dW / (2 hbar)", [
        ("l", float, math.nan, "angular momentum"),
        ("p", float, math.nan, "asymptotic momentum"),
        ("m", float, math.nan, "partial wave (alternative to --l)"),
        ("k", float, math.nan, "wavenumber (alternative to --p)"),
        ("reduced", bool, False, "reduce modulo pi to [-pi/2, pi/2)"),
    ]),
    "timedelay": ("classical time delay d dW / dE", [
        ("l", float, None, "angular momentum"),
        ("e", float, None, "energy"),
    ]),
    "grid": ("dW or the smoothed branch on an (l, p) grid", [
        ("which", str, "raw", "raw or smoothed"),
        ("lmin", float, -3.0, ""), ("lmax", float, 3.0, ""),
        ("pmin", float, 1.0, ""), ("pmax", float, 9.0, ""),
        ("nl", int, 121, ""), ("np", int, 161, ""),
    ]),
    "deflect": ("deflection angle from the radial integral and from -d dW/dl", [
        ("l", float, None, "angular momentum"),
        ("p", float, None, "asymptotic momentum"),
        ("orbit", bool, False, "also integrate the trajectory"),
    ]),
    "orbit": ("planar trajectories t, x, y, px, py", [
        ("l", _floats, None, "angular momenta, comma separated"),
        ("p", _floats, None, "asymptotic momenta, comma separated"),
        ("r-far", float, math.nan, "start/stop radius (default: automatic)"),
    ]),
    "loop": ("continuously tracked deflection around a rectangle in (l, p)", [
        ("lmin", float, -1.0, ""), ("lmax", float, 1.0, ""),
        ("pmin", float, 4.0, ""), ("pmax", float, 9.0, ""),
        ("samples-per-leg", int, 40, ""),
        ("reverse", bool, False, "traverse clockwise"),
    ]),
    "lattice": ("zeros of the phase shift mod pi in the (m, k) plane", [
        ("mmin", int, -12, ""), ("mmax", int, 12, ""),
        ("kmin", float, 4.0, ""), ("kmax", float, 36.0, ""),
        ("branch", str, "raw", "label branch for JSON output"),
        ("phase-source", str, "wkb", "wkb or quantum"),
    ]),
    "transport": ("carry a lattice cell around a rectangle in (l, p)", [
        ("lmin", float, -1.25, ""), ("lmax", float, 1.25, ""),
        ("pmin", float, 4.5, ""), ("pmax", float, 10.0, ""),
        ("samples-per-leg", int, 40, ""),
        ("reverse", bool, False, "traverse clockwise"),
        ("start-m", int, 4, "column of the starting cell's base zero"),
        ("start-n", int, -9, "raw label of the starting cell's base zero"),
        ("kmin", float, 4.0, "lattice k range"), ("kmax", float, 70.0, ""),
    ]),
    "verify": ("exact against WKB phase shifts", [
        ("m", _ints, VERIFY_M, "partial waves, comma separated"),
        ("k", _floats, VERIFY_K, "wavenumbers, comma separated"),
        ("mesh-step", float, 0.05, "coarsest Numerov step (k L h)"),
        ("r-match", float, 20.0, "matching radius in units of 1/b"),
    ]),
}

JSON_DEFAULT = {"loop", "transport"}


def _dest(flag: str) -> str:
    return flag.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scatmono", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for name, (help_text, opts) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        for flag, typ, _, h in COMMON + opts:
            if typ is bool:
                sp.add_argument(f"--{flag}", action="store_const", const=True, default=None, help=h)
            else:
                sp.add_argument(f"--{flag}", type=str, default=None, help=h)
        sp.add_argument("--config", default=None, help="flat key=value file mirroring the flags")
        sp.add_argument("--quiet", action="store_true", help="no progress messages on stderr")
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("_", "-")] = value
    return out


def _convert(flag: str, typ: Callable, raw: Any) -> Any:
    if typ is bool:
        return raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes", "on")
    try:
        return typ(raw)
    except ValueError as exc:
        raise UsageError(f"invalid value for --{flag}: {raw!r}") from exc


@dataclass
class RunConfig:
    command: str
    values: dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def given(self, key: str) -> bool:
        v = self.values.get(key)
        return not (v is None or (isinstance(v, float) and math.isnan(v)))

    def potential(self) -> PotentialModel:
        kind = self["potential"]
        if kind == "lorentzian":
            return lorentzian(self["a"], self["b"], self["mu"])
        if kind == "zero":
            return zero_potential(self["mu"])
        raise DomainError(f"unknown potential {kind!r}")

    def quad(self) -> QuadratureSpec:
        r_cut = self["r_cut"] if self.given("r_cut") else None
        return QuadratureSpec(rel_tol=self["rel_tol"], abs_tol=self["abs_tol"], r_cut=r_cut)


def resolve(args: argparse.Namespace) -> RunConfig:
    opts = COMMON + COMMANDS[args.command][1]
    known = {flag for flag, *_ in opts}
    file_values = read_config(args.config) if args.config else {}
    unknown = set(file_values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    values = {}
    for flag, typ, default, _ in opts:
        raw = getattr(args, _dest(flag))
        if raw is None:
            raw = file_values.get(flag, default)
        if raw is None:
            raise UsageError(f"--{flag} is required for {args.command}")
        values[_dest(flag)] = _convert(flag, typ, raw)
    if not values["format"]:
        values["format"] = "json" if args.command in JSON_DEFAULT else "csv"
    if values["format"] not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    return RunConfig(args.command, values)


# --- output ---------------------------------------------------------------

def _num(x: Any) -> Any:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, np.integer):
        return int(x)
    return x


def _cell(x: Any) -> str:
    x = _num(x)
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".15g")
    return str(x)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _num(obj)


@dataclass
class Table:
    header: list[str]
    rows: list[list[Any]]

    def records(self) -> list[dict]:
        return [dict(zip(self.header, row)) for row in self.rows]


def render(result: Table | dict | list, fmt: str) -> str:
    if fmt == "json":
        payload = result.records() if isinstance(result, Table) else result
        return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if not isinstance(result, Table):
        raise UsageError("this output is only available as --format json")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header)
    for row in result.rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


# --- commands -------------------------------------------------------------

def _momentum(cfg: RunConfig, pot: PotentialModel) -> float:
    if cfg.given("p"):
        return cfg["p"]
    if cfg.given("e"):
        if not cfg["e"] > 0:
            raise DomainError("energy must be positive")
        return math.sqrt(2.0 * pot.mu * cfg["e"])
    raise UsageError("give --p or --e")


def cmd_info(cfg, pot):
    return Table(["e_c", "p_c", "alpha"], [[pot.e_c, pot.p_c, pot.alpha]])


def cmd_action(cfg, pot):
    pt = ScatterPoint(cfg["l"], _momentum(cfg, pot))
    if cfg["portrait"]:
        r, free, scat = actions.phase_portrait(pot, pt, cfg["rmax"], cfg["nr"])
        return Table(["r", "pr_free", "pr_potential"], [list(row) for row in zip(r, free, scat)])
    v = actions.delta_w(pot, pt, cfg.quad())
    return Table(["l", "p", "value", "err_estimate"], [[pt.l, pt.p, v.value, v.err_estimate]])


def cmd_dwdl(cfg, pot):
    if cfg["limit"]:
        v = actions.limit_dl(pot, cfg["p"], cfg["limit"], cfg.quad())
        return Table(["side", "p", "value", "err_estimate"], [[cfg["limit"], cfg["p"], v.value, v.err_estimate]])
    if not cfg.given("l"):
        raise UsageError("give --l, or --limit for l -> 0")
    v = actions.d_delta_w_dl(pot, ScatterPoint(cfg["l"], cfg["p"]), cfg.quad())
    return Table(["l", "p", "value", "err_estimate"], [[cfg["l"], cfg["p"], v.value, v.err_estimate]])


def cmd_smoothed(cfg, pot):
    v = actions.delta_w_smoothed(pot, ScatterPoint(cfg["l"], cfg["p"]), cfg.quad())
    return Table(["l", "p", "value", "err_estimate"], [[cfg["l"], cfg["p"], v.value, v.err_estimate]])


def cmd_phase(cfg, pot):
    hbar = cfg["hbar"]
    if cfg.given("m") and cfg["m"] != int(cfg["m"]):
        raise UsageError("--m must be an integer")
    l = cfg["l"] if cfg.given("l") else cfg["m"] * hbar if cfg.given("m") else None
    p = cfg["p"] if cfg.given("p") else cfg["k"] * hbar if cfg.given("k") else None
    if l is None or p is None:
        raise UsageError("give --l/--m and --p/--k")
    delta = actions.wkb_phase_shift(pot, ScatterPoint(l, p), hbar, cfg.quad(), reduced=cfg["reduced"])
    return Table(["l", "p", "delta"], [[l, p, delta]])


def cmd_timedelay(cfg, pot):
    v = actions.time_delay(pot, cfg["l"], cfg["e"], cfg.quad())
    return Table(["l", "e", "value", "err_estimate"], [[cfg["l"], cfg["e"], v.value, v.err_estimate]])


def cmd_grid(cfg, pot):
    rows = actions.grid_scan(pot, (cfg["lmin"], cfg["lmax"]), (cfg["pmin"], cfg["pmax"]),
                             cfg["nl"], cfg["np"], cfg["which"], cfg.quad())
    return Table(["l", "p", "value"], [[r.l, r.p, r.value] for r in rows])


def cmd_deflect(cfg, pot):
    pt = ScatterPoint(cfg["l"], cfg["p"])
    quad = cfg.quad()
    header = ["l", "p", "deflection_integral", "minus_dwdl"]
    row = [pt.l, pt.p, orbits.deflection_integral(pot, pt, quad), -actions.d_delta_w_dl(pot, pt, quad).value]
    if cfg["orbit"]:
        header.append("deflection_orbit")
        row.append(orbits.integrate_orbit(pot, pt).deflection)
    return Table(header, [row])


def cmd_orbit(cfg, pot):
    ls, ps = cfg["l"], cfg["p"]
    if len(ls) != len(ps):
        raise UsageError("--l and --p need the same number of entries")
    r_far = cfg["r_far"] if cfg.given("r_far") else None
    many = len(ls) > 1
    rows, summaries = [], []
    for i, (l, p) in enumerate(zip(ls, ps)):
        tr = orbits.integrate_orbit(pot, ScatterPoint(l, p), r_far=r_far)
        log.info("orbit l=%g p=%g: deflection %.12g, leaves towards %s", l, p, tr.deflection, tr.final_direction)
        summaries.append({"l": l, "p": p, "deflection": tr.deflection, "final_direction": tr.final_direction})
        rows.extend(([i] if many else []) + list(s) for s in tr.samples)
    header = (["orbit"] if many else []) + ["t", "x", "y", "px", "py"]
    if cfg["format"] == "json":
        return {"orbits": summaries, "samples": Table(header, rows).records()}
    return Table(header, rows)


def _rect(cfg):
    path = orbits.rectangle(cfg["lmin"], cfg["lmax"], cfg["pmin"], cfg["pmax"], cfg["samples_per_leg"])
    return path.reversed() if cfg["reverse"] else path


def cmd_loop(cfg, pot):
    rep = orbits.holonomy_report(pot, _rect(cfg), cfg.quad())
    if cfg["format"] == "json":
        return rep.to_json()
    return Table(["l", "p", "dphi"], [list(t) for t in rep.track])


def cmd_lattice(cfg, pot):
    lat = lattice.ZeroLattice(pot, cfg["hbar"], (cfg["kmin"], cfg["kmax"]), cfg.quad(), phase=cfg["phase_source"])
    pts = []
    for m in range(cfg["mmin"], cfg["mmax"] + 1):
        log.info("column m=%d", m)
        pts.extend(lat.column(m))
    if cfg["format"] == "json":
        branch = cfg["branch"]
        return [{"m": q.m, "k": q.k, "n": q.label(branch), "branch": branch} for q in pts]
    return Table(["m", "k"], [[q.m, q.k] for q in pts])


def cmd_transport(cfg, pot):
    lat = lattice.ZeroLattice(pot, cfg["hbar"], (cfg["kmin"], cfg["kmax"]), cfg.quad())
    res = lattice.transport_cell(pot, cfg["hbar"], (cfg["start_m"], cfg["start_n"]), _rect(cfg), cfg.quad(), lattice=lat)
    return res.to_json()


def cmd_verify(cfg, pot):
    mesh = quantum.MeshSpec(step=cfg["mesh_step"], r_match=cfg["r_match"])
    rows = quantum.compare_wkb(pot, cfg["m"], cfg["k"], cfg["hbar"], cfg.quad(), mesh)
    worst = max((r.rel_err for r in rows if not math.isnan(r.rel_err)), default=math.nan)
    log.info("max relative error %.3e over %d points", worst, len(rows))
    return Table(["m", "k", "delta_wkb", "delta_exact", "abs_err", "rel_err"], [list(r.as_tuple()) for r in rows])


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        pot = cfg.potential()
        text = render(HANDLERS[args.command](cfg, pot), cfg["format"])
    except UsageError as exc:
        print(f"scatmono {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"scatmono {args.command}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConvergenceError, lattice.LatticeError, RuntimeError) as exc:
        print(f"scatmono {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"scatmono {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
