"""Command-line interface.

    borromean twobody --v0 0.32 --alpha 0
    borromean spectrum --v0 0.32 --alpha 0 --mass-ratio 22.2
    borromean curve --alpha-min 2.5 --alpha-max 3.8 --alpha-steps 14
    borromean wavefunction --alpha 2.11 --dump psi.csv
    borromean window --v0-min 0.1 --v0-max 0.4 --v0-steps 4
    borromean mass-sweep --mass-ratios 0.2 22.2 720

Settings come from built-in defaults, then an optional JSON ``--config``
file, then explicit flags.  ``--print-config`` shows the merged settings and
exits.  Exit codes: 0 success (empty results included), 2 usage error,
3 convergence failure, 4 domain error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError
from .faddeev import MassConfig, build_grid, default_grid, find_spectrum
from .observables import state_geometry
from .output import write_grid_dump, write_report, write_table
from .scan import map_borromean_window, mass_ratio_sweep, spectrum_curve
from .twobody import (
    PotentialParams,
    StateKind,
    alpha_critical,
    energy_asymptotic,
    region_of,
    solve_two_body,
)
from .wavefunction import faddeev_component

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_DOMAIN = 0, 2, 3, 4

DEFAULTS = {
    "v0": 0.32,
    "alpha": 0.0,
    "mass_ratio": 22.2,
    "grid": "composite",
    "n_points": 200,
    "map_scale": 1.0,
    "tol": 1e-11,
    "samples_per_decade": 200,
    "alpha_min": None,
    "alpha_max": None,
    "alpha_steps": 11,
    "v0_min": None,
    "v0_max": None,
    "v0_steps": 5,
    "mass_ratios": [0.2, 22.2, 720.0],
    "offset": 1e-3,
    "state": 0,
    "window": None,
    "resolution": None,
    "coverage": 0.99,
    "dump": None,
    "format": None,
    "out": None,
    "jobs": 1,
}

# keys that only affect where output goes, not what it contains
_NOT_PROVENANCE = {"out", "format", "dump", "jobs", "print_config", "config"}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=None)
    common.add_argument("--config", type=Path, help="JSON file with settings (overridden by flags)")
    common.add_argument("--print-config", action="store_true", help="print merged settings and exit")
    common.add_argument("--v0", type=float, help="coupling v0 (default 0.32)")
    common.add_argument("--alpha", type=float, help="repulsion parameter alpha (default 0)")
    common.add_argument("--mass-ratio", type=float, help="boson to X mass ratio M/m (default 22.2)")
    common.add_argument("--grid", choices=["composite", "mapped"],
                        help="momentum grid: composite panels (default) or the mapped rule")
    common.add_argument("--n-points", type=int, help="nodes of the mapped grid (default 200)")
    common.add_argument("--map-scale", type=float, help="scale L of the mapped grid (default 1)")
    common.add_argument("--tol", type=float, help="relative tolerance of energy roots (default 1e-11)")
    common.add_argument("--samples-per-decade", type=int, help="energy ladder density (default 200)")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--jobs", type=int, help="parallel scan points (default 1)")

    parser = argparse.ArgumentParser(prog="borromean", description="BBX three-body bound states in 1D")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("twobody", parents=[common], help="two-body poles and region")
    sub.add_parser("spectrum", parents=[common], help="three-body energies at one alpha")
    p = sub.add_parser("curve", parents=[common], help="three-body spectrum against alpha")
    p.add_argument("--alpha-min", type=float)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--alpha-steps", type=int)
    p = sub.add_parser("wavefunction", parents=[common], help="wave function and geometry of a state")
    p.add_argument("--state", type=int, help="state index, 0 = ground state")
    p.add_argument("--window", type=float, nargs=2, metavar=("P1", "K23"),
                   help="initial momentum half-widths")
    p.add_argument("--resolution", type=int, help="position samples per axis (zero padding)")
    p.add_argument("--coverage", type=float, help="momentum norm coverage target (default 0.99)")
    p.add_argument("--dump", type=Path, help="write the position grid here (CSV + JSON sidecar)")
    p = sub.add_parser("window", parents=[common], help="Borromean window (alpha_c, alpha_w)")
    p.add_argument("--v0-min", type=float)
    p.add_argument("--v0-max", type=float)
    p.add_argument("--v0-steps", type=int)
    p = sub.add_parser("mass-sweep", parents=[common], help="Borromean states against M/m")
    p.add_argument("--mass-ratios", type=float, nargs="+")
    p.add_argument("--offset", type=float, help="alpha = alpha_c (1 + offset), default 1e-3")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        loaded = loaded.get("config", loaded)
        unknown = set(loaded) - set(DEFAULTS) - {"command"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in loaded.items() if k != "command"})
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = list(value) if isinstance(value, (list, tuple)) else value
    if isinstance(cfg.get("out"), Path):
        cfg["out"] = str(cfg["out"])
    if isinstance(cfg.get("dump"), Path):
        cfg["dump"] = str(cfg["dump"])
    cfg["command"] = args.command
    return cfg


def provenance(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in _NOT_PROVENANCE}


def _grid(cfg, masses):
    if cfg["grid"] == "mapped":
        return build_grid(int(cfg["n_points"]), float(cfg["map_scale"]))
    return default_grid(masses)


@contextmanager
def _sink(cfg):
    if cfg["out"] is None:
        yield sys.stdout
    else:
        with open(cfg["out"], "w", newline="") as fh:
            yield fh


def cmd_twobody(cfg) -> int:
    params = PotentialParams(cfg["v0"], cfg["alpha"])
    ac = alpha_critical(params.v0)
    states = solve_two_body(params)
    region = region_of(params)
    asym = energy_asymptotic(params)
    rows = [{"kappa_I": s.kappa_I, "kind": s.kind.value, "energy": s.energy,
             "region": region.value, "alpha_c": ac, "asymptotic_energy": asym} for s in states]
    fmt = cfg["format"] or "csv"
    with _sink(cfg) as out:
        if fmt == "json":
            write_report({"region": region.value, "alpha_c": ac, "asymptotic_energy": asym,
                          "states": rows}, provenance(cfg), out)
        else:
            write_table(rows, ["kappa_I", "kind", "energy", "region", "alpha_c", "asymptotic_energy"],
                        provenance(cfg), fmt, out)
    return EXIT_OK


def _two_body_scale(params):
    bound = [s for s in solve_two_body(params) if s.kind is StateKind.BOUND]
    return bound[0].energy if bound else None


def cmd_spectrum(cfg) -> int:
    params = PotentialParams(cfg["v0"], cfg["alpha"])
    masses = MassConfig(cfg["mass_ratio"])
    res = find_spectrum(params, masses, _grid(cfg, masses), rel_tol=cfg["tol"],
                        samples_per_decade=int(cfg["samples_per_decade"]), jobs=int(cfg["jobs"]))
    e2 = _two_body_scale(params)
    rows = [{"n": n, "energy": s.energy, "ratio_to_E2": (s.energy / e2) if e2 else None,
             "residual": s.residual, "near_threshold": s.near_threshold}
            for n, s in enumerate(res.states)]
    d = res.diagnostics
    diag = {k: d[k] for k in ("imag_ratio", "search_floor", "top_gap", "resolution_limited",
                              "edge_count", "count_mismatch", "max_residual") if k in d}
    fmt = cfg["format"] or "csv"
    with _sink(cfg) as out:
        if fmt == "json":
            write_report({"threshold": res.threshold, "two_body_energy": e2, "states": rows,
                          "diagnostics": diag}, provenance(cfg), out)
        else:
            write_table(rows, ["n", "energy", "ratio_to_E2", "residual", "near_threshold"],
                        provenance(cfg), fmt, out)
    return EXIT_OK


def _samples(lo, hi, steps, name):
    if lo is None or hi is None:
        raise UsageError(f"--{name}-min and --{name}-max are required")
    if steps < 1 or hi < lo:
        raise UsageError(f"need {name}-max >= {name}-min and at least one step")
    return list(np.linspace(lo, hi, steps)) if steps > 1 else [float(lo)]


def cmd_curve(cfg) -> int:
    masses = MassConfig(cfg["mass_ratio"])
    alphas = _samples(cfg["alpha_min"], cfg["alpha_max"], int(cfg["alpha_steps"]), "alpha")
    rows_in = spectrum_curve(PotentialParams(cfg["v0"], 0.0), masses, alphas, grid=_grid(cfg, masses),
                             samples_per_decade=int(cfg["samples_per_decade"]), jobs=int(cfg["jobs"]))
    rows = []
    for r in rows_in:
        base = {"alpha": r.alpha, "two_body_energy": r.two_body_energy, "two_body_kind": r.two_body_kind,
                "threshold": r.threshold, "flags": ";".join(r.flags), "error": r.error}
        if not r.energies:
            rows.append(dict(base, n=None, energy=None))
        for n, e in enumerate(r.energies):
            rows.append(dict(base, n=n, energy=e))
    cols = ["alpha", "n", "energy", "two_body_energy", "two_body_kind", "threshold", "flags", "error"]
    with _sink(cfg) as out:
        write_table(rows, cols, provenance(cfg), cfg["format"] or "csv", out)
    return EXIT_OK


def cmd_wavefunction(cfg) -> int:
    params = PotentialParams(cfg["v0"], cfg["alpha"])
    masses = MassConfig(cfg["mass_ratio"])
    res = find_spectrum(params, masses, _grid(cfg, masses), rel_tol=cfg["tol"],
                        samples_per_decade=int(cfg["samples_per_decade"]))
    idx = int(cfg["state"])
    if idx >= len(res.states):
        raise DomainError(f"state {idx} requested but only {len(res.states)} bound states exist")
    comp = faddeev_component(res.states[idx], params, masses)
    window = tuple(cfg["window"]) if cfg["window"] else None
    report, pos = state_geometry(comp, masses, window=window, coverage_target=float(cfg["coverage"]),
                                 position_resolution=cfg["resolution"])
    body = dict(report.as_dict(), energy=comp.energy,
                parseval_error=report.metadata["parseval_error"],
                frame_fraction=report.metadata["frame_fraction"],
                momentum_window=list(report.metadata["window"]),
                momentum_resolution=list(report.metadata["resolution"]))
    if cfg["dump"]:
        write_grid_dump(pos, provenance(cfg), cfg["dump"])
        body["dump"] = str(cfg["dump"])
    fmt = cfg["format"] or "json"
    with _sink(cfg) as out:
        if fmt == "json":
            write_report(body, provenance(cfg), out)
        else:
            rows = [{"quantity": k, "value": v if not isinstance(v, list) else " ".join(map(str, v))}
                    for k, v in sorted(body.items())]
            write_table(rows, ["quantity", "value"], provenance(cfg), fmt, out)
    return EXIT_OK


def cmd_window(cfg) -> int:
    masses = MassConfig(cfg["mass_ratio"])
    if cfg["v0_min"] is None and cfg["v0_max"] is None:
        v0s = [float(cfg["v0"])]
    else:
        v0s = _samples(cfg["v0_min"], cfg["v0_max"], int(cfg["v0_steps"]), "v0")
    records = map_borromean_window(v0s, masses, grid=_grid(cfg, masses), jobs=int(cfg["jobs"]))
    rows = [{"v0": r.v0, "alpha_c": r.alpha_c, "alpha_w": r.alpha_w, "width": r.width,
             "mass_ratio": r.mass_ratio} for r in records]
    with _sink(cfg) as out:
        write_table(rows, ["v0", "alpha_c", "alpha_w", "width", "mass_ratio"], provenance(cfg),
                    cfg["format"] or "csv", out)
    return EXIT_OK


def cmd_mass_sweep(cfg) -> int:
    grid = build_grid(int(cfg["n_points"]), float(cfg["map_scale"])) if cfg["grid"] == "mapped" else None
    sweep = mass_ratio_sweep(cfg["v0"], cfg["mass_ratios"], offset=float(cfg["offset"]), grid=grid,
                             samples_per_decade=int(cfg["samples_per_decade"]), jobs=int(cfg["jobs"]))
    rows = []
    for r in sweep:
        base = {"mass_ratio": r.mass_ratio, "alpha": r.alpha, "edge_count": r.edge_count, "error": r.error}
        if r.error:
            rows.append(dict(base, n=None, energy=None))
        for n, e in enumerate(r.energies):
            rows.append(dict(base, n=n, energy=e))
    with _sink(cfg) as out:
        write_table(rows, ["mass_ratio", "alpha", "n", "energy", "edge_count", "error"], provenance(cfg),
                    cfg["format"] or "csv", out)
    return EXIT_OK


COMMANDS = {
    "twobody": cmd_twobody,
    "spectrum": cmd_spectrum,
    "curve": cmd_curve,
    "wavefunction": cmd_wavefunction,
    "window": cmd_window,
    "mass-sweep": cmd_mass_sweep,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        parser.error(str(exc))
    if args.print_config:
        print(json.dumps(cfg, sort_keys=True, indent=2))
        return EXIT_OK
    try:
        return COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
