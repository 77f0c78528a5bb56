"""Command line front end.

    honeystrain bands2d  --grid 60
    honeystrain bands    --orient ac --deform quad-ac --delta 0.04 --nt 200 --q -0.02:0.02:21 --num 40
    honeystrain modes    --orient ac --deform quad-ac --delta 0.04 --nt 400 --q 0 --tol 0.06
    honeystrain dirac    --d quad-ac --t1 -2 --kpar 0 --w 20 --n 4096
    honeystrain strain   --u triaxial --t1 -2 --grid 5
    honeystrain validate --deform reg-ac:L=1,w=0.5 --deltas 0.08,0.04,0.02

Every option can also come from a JSON file given with --config, using the
option names without dashes (e.g. {"orient": "ac", "nt": 200}); flags on the
command line override file values.  Exit status: 0 ok, 2 invalid
configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Dict

import numpy as np

from . import io as hio
from .deformation import (FieldKind, bond_strain, effective_potential, parse_deformation,
                          pseudo_field)
from .dirac1d import KappaProfile, discretize, in_gap_spectrum
from .geometry import GEOMETRY
from .hamiltonian import (Boundary, Orientation, SupercellSpec, assemble_supercell, bulk_dispersion,
                          parse_hopping)
from .linalg import EigenFailure
from .spectra import (NumericalError, classify_degenerate_subspace, default_abs_tol, eig_hermitian,
                      label_counts, sweep)
from .validation import CoverageError, ValidationConfig, run_validation


class ConfigError(ValueError):
    pass


COMMON = {"config": None, "out": "-", "threads": None}
DEFAULTS: Dict[str, Dict] = {
    "bands2d": {"grid": 60},
    "bands": {"orient": "ac", "deform": "none", "delta": 0.0, "nt": 200, "t1": -2.0, "hopping": "fd",
              "q": "0", "num": 40, "boundary": "zero"},
    "modes": {"orient": "ac", "deform": "none", "delta": 0.0, "nt": 200, "t1": -2.0, "hopping": "fd",
              "q": 0.0, "num": 40, "boundary": "zero", "tol": None, "layer": 20},
    "dirac": {"deform": "quad-ac", "t1": -2.0, "kpar": 0.0, "w": 20.0, "n": 4096, "levels": 7,
              "margin": 0.05},
    "strain": {"deform": "triaxial", "t1": -2.0, "grid": 5, "extent": 1.0},
    "validate": {"deform": "reg-ac:L=1,w=0.5", "t1": -2.0, "kpar": 0.0, "deltas": "0.08,0.04,0.02",
                 "hopping": "fd", "dirac_w": 40.0, "dirac_n": 8000, "reach": 30.0},
}


def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = argparse.ArgumentParser(prog="honeystrain", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=S, help="JSON file with option values")
        sp.add_argument("--out", "-o", default=S, help="output path ('-' for stdout)")
        sp.add_argument("--threads", type=int, default=S, help="worker threads (default: all cores)")

    def lattice(sp, q_help):
        sp.add_argument("--orient", choices=["ac", "zz"], default=S)
        sp.add_argument("--deform", "--d", "--u", dest="deform", default=S,
                        help="none | quad-ac | quad-zz | triaxial | reg-ac:L=..,w=.. | csv:<file>")
        sp.add_argument("--delta", type=float, default=S)
        sp.add_argument("--nt", type=int, default=S, help="truncation half-width N_T")
        sp.add_argument("--t1", type=float, default=S)
        sp.add_argument("--hopping", choices=["fd", "exact", "cell"], default=S)
        sp.add_argument("--boundary", choices=["zero", "periodic"], default=S)
        sp.add_argument("--q", default=S, help=q_help)
        sp.add_argument("--num", type=int, default=S, help="number of smallest-|E| bands")

    sp = sub.add_parser("bands2d", help="bulk bands on a Brillouin-zone grid")
    common(sp)
    sp.add_argument("--grid", type=int, default=S)

    sp = sub.add_parser("bands", help="supercell band curves over a q grid")
    common(sp)
    lattice(sp, "q grid min:max:count or a single value")

    sp = sub.add_parser("modes", help="classify near-zero modes at one q")
    common(sp)
    lattice(sp, "quasi-momentum")
    sp.add_argument("--tol", type=float, default=S, help="|E| threshold of the zero subspace")
    sp.add_argument("--layer", type=int, default=S, help="boundary layer width in cells")

    sp = sub.add_parser("dirac", help="in-gap spectrum of the 1D Dirac operator")
    common(sp)
    sp.add_argument("--deform", "--d", "--u", dest="deform", default=S)
    sp.add_argument("--t1", type=float, default=S)
    sp.add_argument("--kpar", type=float, default=S)
    sp.add_argument("--w", type=float, default=S, help="half width W of the domain")
    sp.add_argument("--n", type=int, default=S, help="number of grid cells")
    sp.add_argument("--levels", type=int, default=S, help="levels reported for unbounded profiles")
    sp.add_argument("--margin", type=float, default=S)

    sp = sub.add_parser("strain", help="bond strains and gauge fields on a grid")
    common(sp)
    sp.add_argument("--deform", "--d", "--u", dest="deform", default=S)
    sp.add_argument("--t1", type=float, default=S)
    sp.add_argument("--grid", type=int, default=S)
    sp.add_argument("--extent", type=float, default=S)

    sp = sub.add_parser("validate", help="ansatz residuals and eigenvalue correctors")
    common(sp)
    sp.add_argument("--deform", "--d", "--u", dest="deform", default=S)
    sp.add_argument("--t1", type=float, default=S)
    sp.add_argument("--kpar", type=float, default=S)
    sp.add_argument("--deltas", default=S, help="comma separated list")
    sp.add_argument("--hopping", choices=["fd", "exact", "cell"], default=S)
    sp.add_argument("--dirac-w", dest="dirac_w", type=float, default=S)
    sp.add_argument("--dirac-n", dest="dirac_n", type=int, default=S)
    sp.add_argument("--reach", type=float, default=S, help="|X1| covered by the supercell")
    return p


def _join_negative_values(argv):
    """Allow `--q -0.33:0.33:67`: argparse would read the value as an option."""
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--q", "--deltas"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def resolve(argv):
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = vars(_parser().parse_args(_join_negative_values(argv)))
    cmd = ns.pop("command")
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[cmd])
    path = ns.get("config")
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"--config: cannot read {path}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("--config: file must hold a JSON object")
        unknown = set(data) - set(cfg)
        if unknown:
            raise ConfigError(f"--config: unknown keys {sorted(unknown)} for '{cmd}'")
        cfg.update(data)
    cfg.update(ns)
    return cmd, cfg


# --------------------------------------------------------------- helpers

def _q_grid(text) -> np.ndarray:
    s = str(text)
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--q: expected min:max:count, got {s!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"--q: cannot parse {s!r}")
        if n < 1:
            raise ConfigError("--q: count must be >= 1")
        return np.linspace(lo, hi, n)
    try:
        return np.array([float(s)])
    except ValueError:
        raise ConfigError(f"--q: cannot parse {s!r}")


def _field(name, flag="--deform"):
    try:
        return parse_deformation(str(name))
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{flag}: {exc}")


def _spec(cfg) -> SupercellSpec:
    try:
        return SupercellSpec(
            orientation=Orientation(str(cfg["orient"]).upper()),
            n_t=cfg["nt"],
            boundary=Boundary.Periodic if cfg["boundary"] == "periodic" else Boundary.ZeroTruncation,
            delta=float(cfg["delta"]),
            hopping=parse_hopping(cfg["hopping"]),
            field=_field(cfg["deform"]),
            t1=float(cfg["t1"]),
        )
    except ValueError as exc:
        raise ConfigError(f"--orient/--nt/--delta/--hopping: {exc}")


def _check_q(spec, qs):
    for q in qs:
        try:
            spec.check_q(float(q))
        except ValueError as exc:
            raise ConfigError(f"--q: {exc}")


def _threads(cfg):
    t = cfg.get("threads")
    if t is not None and int(t) < 1:
        raise ConfigError("--threads must be >= 1")
    return None if t is None else int(t)


# -------------------------------------------------------------- commands

def cmd_bands2d(cfg) -> str:
    n = int(cfg["grid"])
    if n < 8:
        raise ConfigError("--grid must be >= 8")
    c = np.arange(n) / n
    c1, c2 = np.meshgrid(c, c, indexing="ij")
    k = c1[..., None] * GEOMETRY.a1 + c2[..., None] * GEOMETRY.a2
    em, ep = bulk_dispersion(k)
    rows = np.stack([c1.ravel(), c2.ravel(), em.ravel(), ep.ravel()], -1)
    return hio.csv_text(["k1", "k2", "E_minus", "E_plus"], rows)


def cmd_bands(cfg) -> str:
    spec = _spec(cfg)
    qs = _q_grid(cfg["q"])
    _check_q(spec, qs)
    num = int(cfg["num"])
    if not 1 <= num <= spec.dim:
        raise ConfigError(f"--num must be in [1, {spec.dim}]")
    sw = sweep(spec, qs, num, threads=_threads(cfg))
    return hio.bands_csv(sw.q_grid, sw.curves)


def cmd_modes(cfg) -> str:
    spec = _spec(cfg)
    try:
        q = float(cfg["q"])
    except ValueError:
        raise ConfigError("--q must be a single number for modes")
    _check_q(spec, [q])
    tol = cfg["tol"]
    if tol is None:
        tol = default_abs_tol(spec.delta, spec.t1, not spec.field.is_zero)
    layer = int(cfg["layer"])
    if layer < 1 or 2 * layer > spec.n_cells:
        raise ConfigError(f"--layer must be in [1, {spec.n_cells // 2}]")
    num = int(cfg["num"])
    res = eig_hermitian(assemble_supercell(spec, q), True, min(num, spec.dim))
    if np.sum(np.abs(res.eigenvalues) <= tol) == len(res.eigenvalues) and num < spec.dim:
        raise ConfigError(f"--num {num} too small: every computed eigenvalue lies below --tol")
    modes = classify_degenerate_subspace(res, float(tol), layer)
    out = {
        "q": q, "tol": float(tol), "layer_cells": layer, "counts": label_counts(modes),
        "modes": [{"q": q, "eigenvalue": m.eigenvalue, "label": m.label.value,
                   "boundary_weight": min(max(m.boundary_weight, 0.0), 1.0),
                   "profile": np.sqrt(m.profile())} for m in modes],
    }
    return hio.json_text(out, hio.MODES_SCHEMA)


def cmd_dirac(cfg) -> str:
    field = _field(cfg["deform"])
    if field.kind is not FieldKind.UnidirectionalAC:
        raise ConfigError("--deform: the Dirac reduction needs a unidirectional AC profile")
    kp = KappaProfile.from_profile(field.profile, float(cfg["kpar"]), float(cfg["t1"]))
    try:
        disc = discretize(kp, float(cfg["w"]), int(cfg["n"]))
    except ValueError as exc:
        raise ConfigError(f"--w/--n: {exc}")
    res = in_gap_spectrum(disc, kp, max_count=None if kp.d_infinity is not None else int(cfg["levels"]),
                          margin=float(cfg["margin"]))
    out = {"profile": field.name, "k_parallel": kp.k_parallel, "t1": kp.t1, "half_width": disc.half_width,
           "n_cells": disc.n_cells, "dim": disc.dim,
           "gap_edge": res.gap_edge_a if np.isfinite(res.gap_edge_a) else None,
           "eigenvalues": res.in_gap_eigenvalues}
    return hio.json_text(out, hio.DIRAC_SCHEMA)


def cmd_strain(cfg) -> str:
    field = _field(cfg["deform"])
    n = int(cfg["grid"])
    if n < 2:
        raise ConfigError("--grid must be >= 2")
    ext = float(cfg["extent"])
    t1 = float(cfg["t1"])
    g = np.linspace(-ext, ext, n)
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    f = [bond_strain(field, X, nu) for nu in (1, 2, 3)]
    A1, A2 = effective_potential(field, X, t1)
    B = pseudo_field(field, X, t1) * np.ones(len(X))
    rows = np.column_stack([X, *f, A1, A2, B])
    return hio.csv_text(["X1", "X2", "f1", "f2", "f3", "A1", "A2", "B_eff"], rows)


def cmd_validate(cfg) -> str:
    field = _field(cfg["deform"])
    name = field.name
    if not name.startswith("reg-ac:"):
        raise ConfigError("--deform: validation uses the regularised profile reg-ac:L=..,w=..")
    params = dict(item.split("=") for item in name[len("reg-ac:"):].split(","))
    try:
        deltas = [float(v) for v in str(cfg["deltas"]).split(",")]
    except ValueError:
        raise ConfigError("--deltas: expected a comma separated list of numbers")
    if len(deltas) < 3 or any(d <= 0 for d in deltas):
        raise ConfigError("--deltas: need at least three positive values")
    vc = ValidationConfig(L=float(params["L"]), mollifier_width=float(params["w"]), t1=float(cfg["t1"]),
                          k_parallel=float(cfg["kpar"]), deltas=tuple(deltas),
                          hopping=parse_hopping(cfg["hopping"]), dirac_half_width=float(cfg["dirac_w"]),
                          dirac_cells=int(cfg["dirac_n"]), reach=float(cfg["reach"]),
                          threads=_threads(cfg))
    return hio.json_text(run_validation(vc), hio.VALIDATION_SCHEMA)


COMMANDS = {"bands2d": cmd_bands2d, "bands": cmd_bands, "modes": cmd_modes, "dirac": cmd_dirac,
            "strain": cmd_strain, "validate": cmd_validate}


def run(argv=None) -> int:
    try:
        cmd, cfg = resolve(argv)
        text = COMMANDS[cmd](cfg)
        out = cfg.get("out") or "-"
        if out == "-":
            sys.stdout.write(text)
        else:
            try:
                with open(out, "w", newline="\n") as fh:
                    fh.write(text)
            except OSError as exc:
                raise ConfigError(f"--out: cannot write {out}: {exc}")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, EigenFailure, CoverageError, RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
