"""Command-line interface: run the report pipelines, write CSV + SVG outputs.

The CLI is a thin shell over :mod:`ramsey_thermo.experiments` and
:mod:`ramsey_thermo.effective`; it computes no physics itself. Each file
output gets a sibling ``.meta`` file holding every parameter of the run in
flat ``key=value`` form; re-running with ``--config <file>.meta`` reproduces
the outputs byte for byte. Flags given on the command line take precedence
over config-file values.

Exit codes: 0 success, 1 pipeline or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import __version__

ENV_WORKERS = "RAMSEY_THERMO_WORKERS"

FIG1_HEADER = ["gt", "sigma_z", "entropy_norm", "jw_norm", "jq_norm"]
FIG2_HEADER = ["g_over_kappa", "t_star", "entropy_norm", "jw_norm", "jq_norm", "converged"]
FIG3_HEADER = ["g_over_kappa", "t_star", "entropy_norm", "jw_norm", "jq_norm", "n_flux", "converged"]
EVOLVE_HEADER = ["t", "sigma_z", "entropy_norm", "jw_norm", "jq_norm"]

COMMANDS = ("fig1", "fig2", "fig3", "evolve", "crossing", "critical-drive")

_BOOL_TRUE = {"true", "1", "yes", "on"}
_BOOL_FALSE = {"false", "0", "no", "off"}


class CliError(Exception):
    """Pipeline-level failure (exit code 1)."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _BOOL_TRUE:
        return True
    if t in _BOOL_FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


# ---------------------------------------------------------------------------
# value formatting (CSV cells and meta files)


def format_float(x: float) -> str:
    """12 significant digits; scientific notation outside [1e-3, 1e4]."""
    if x == 0:
        return "0"
    ax = abs(x)
    if ax < 1e-3 or ax > 1e4:
        return f"{x:.11e}"
    return f"{x:.12g}"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format_float(float(value))


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    """RFC-4180-style CSV with deterministic number formatting."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\r\n")
            for row in rows:
                fh.write(",".join(format_cell(v) for v in row) + "\r\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


def _meta_value(value) -> str:
    # full precision: a rerun from the meta file must reproduce the inputs bit
    # for bit, so floats are written with repr, not the 12-digit CSV format
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_meta(path: Path, entries: dict, derived: dict | None = None) -> None:
    """Flat key=value run record; derived facts go in as comments."""
    lines = [f"{k}={_meta_value(v)}" for k, v in entries.items()]
    lines.append(f"version={__version__}")
    for k, v in (derived or {}).items():
        lines.append(f"# {k}={_meta_value(v)}")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# config handling


def parse_config_file(path: str) -> dict[str, str]:
    """Flat key=value text; blank lines and # comments are ignored."""
    entries: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def _extract_config(argv: list[str]) -> tuple[list[str], dict[str, str]]:
    out, config = [], {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--config":
            if i + 1 >= len(argv):
                raise CliError("--config requires a path")
            config = parse_config_file(argv[i + 1])
            i += 2
        elif tok.startswith("--config="):
            config = parse_config_file(tok.split("=", 1)[1])
            i += 1
        else:
            out.append(tok)
            i += 1
    return out, config


# ---------------------------------------------------------------------------
# parsers


def _common_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", default="out", help="output directory (created if absent)")
    p.add_argument("--force", action="store_true", default=False,
                   help="overwrite existing output files")
    svg = p.add_mutually_exclusive_group()
    svg.add_argument("--emit-svg", dest="emit_svg", action="store_true", default=True,
                     help="write SVG figures next to the CSV (default)")
    svg.add_argument("--no-svg", dest="emit_svg", action="store_false")


def _workers_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel sweep processes (default: ${ENV_WORKERS} or 1)")


def build_parser(command: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=f"ramsey-thermo {command}")
    if command == "fig1":
        p.add_argument("--regime", required=True, choices=["b_d", "c_e"])
        p.add_argument("--gt-max", type=float, default=math.pi)
        p.add_argument("--samples", type=int, default=401)
        p.add_argument("--n-max", type=int, default=15)
        p.add_argument("--tol", type=float, default=1e-9)
        _common_output_flags(p)
    elif command in ("fig2", "fig3"):
        if command == "fig2":
            p.add_argument("--eps", type=float, required=True)
        p.add_argument("--grid-points", type=int, default=60)
        p.add_argument("--g-min", type=float, default=1e-3)
        p.add_argument("--g-max", type=float, default=1e2)
        p.add_argument("--n-max", type=int, default=15)
        p.add_argument("--tol", type=float, default=1e-9)
        _workers_flag(p)
        _common_output_flags(p)
    elif command == "evolve":
        p.add_argument("--picture", required=True,
                       choices=["rotating_lab", "displaced", "effective_atom"])
        p.add_argument("--g", type=float, required=True)
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--kappa", type=float, default=1.0)
        p.add_argument("--gamma", type=float, default=0.0)
        p.add_argument("--t-end", type=float, required=True)
        p.add_argument("--samples", type=int, default=401)
        p.add_argument("--n-max", type=int, default=15)
        p.add_argument("--tol", type=float, default=1e-9)
        _common_output_flags(p)
    elif command == "crossing":
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--g-tol", type=float, default=1e-4)
    elif command == "critical-drive":
        p.add_argument("--lo", type=float, default=0.5)
        p.add_argument("--hi", type=float, default=2.0)
        p.add_argument("--resolution", type=float, default=0.05)
        p.add_argument("--grid-points", type=int, default=60)
        p.add_argument("--g-min", type=float, default=1e-3)
        p.add_argument("--g-max", type=float, default=1e2)
        p.add_argument("--n-max", type=int, default=15)
        p.add_argument("--tol", type=float, default=1e-9)
        _workers_flag(p)
    else:  # pragma: no cover
        raise CliError(f"unknown command {command!r}")
    return p


def _apply_config(parser: argparse.ArgumentParser, config: dict[str, str], command: str) -> None:
    """Seed parser defaults from a config file; flags still win."""
    known = {a.dest: a for a in parser._actions if a.dest != "help"}
    for key, raw in config.items():
        if key in ("command", "version"):
            continue
        dest = key.replace("-", "_")
        if dest not in known:
            raise CliError(f"config key {key!r} is not valid for command {command!r}")
        action = known[dest]
        try:
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                value = _parse_bool(raw)
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
            if action.choices and value not in action.choices:
                raise ValueError(f"must be one of {sorted(action.choices)}")
        except ValueError as exc:
            raise CliError(f"config value {key}={raw!r}: {exc}") from exc
        parser.set_defaults(**{dest: value})
        action.required = False


def _resolve_workers(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get(ENV_WORKERS)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise CliError(f"{ENV_WORKERS}={env!r} is not an integer") from exc
    return 1


def _prepare_outputs(out_dir: str, names: list[str], force: bool) -> list[Path]:
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    paths = [base / n for n in names]
    if not force:
        existing = [str(p) for p in paths if p.exists()]
        if existing:
            raise CliError(
                "refusing to overwrite existing outputs (pass --force): " + ", ".join(existing)
            )
    return paths


# ---------------------------------------------------------------------------
# command implementations


def _cmd_fig1(ns) -> int:
    from .experiments import run_fig1
    from .plotting import render_fig1

    result = run_fig1(ns.regime, gt_max=ns.gt_max, samples=ns.samples,
                      n_max=ns.n_max, tol=ns.tol)
    stem = f"fig1_{ns.regime}"
    names = [f"{stem}.csv", f"{stem}.meta"] + ([f"{stem}.svg"] if ns.emit_svg else [])
    paths = _prepare_outputs(ns.out_dir, names, ns.force)
    g = result.params.g
    from .hilbert import LN2

    rows = [[s.t * g, s.sigma_z, s.entropy / LN2, s.jw_norm, s.jq_norm]
            for s in result.samples]
    write_csv(paths[0], FIG1_HEADER, rows)
    write_meta(paths[1],
               dict(command="fig1", regime=ns.regime, gt_max=ns.gt_max,
                    samples=ns.samples, n_max=ns.n_max, tol=ns.tol, emit_svg=ns.emit_svg),
               derived=dict(g_over_kappa=g, eps_over_kappa=result.params.eps, gamma=0.0))
    if ns.emit_svg:
        render_fig1(result.samples, g, str(paths[2]))
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def _sweep_rows_for_csv(sweep, with_n_flux: bool) -> list[list]:
    rows = []
    for r in sweep.rows:
        row = [r.g_over_kappa, r.t_star, r.entropy_norm, r.jw_norm, r.jq_norm]
        if with_n_flux:
            row.append(r.n_flux)
        row.append(r.converged)
        rows.append(row)
    return rows


def _cmd_fig2(ns) -> int:
    from .experiments import run_fig2
    from .plotting import render_fig2

    workers = _resolve_workers(ns.workers)
    grid = _grid_from_ns(ns)
    sweep = run_fig2(ns.eps, g_grid=grid, n_max=ns.n_max, tol=ns.tol, workers=workers)
    stem = f"fig2_eps{ns.eps:g}"
    names = [f"{stem}.csv", f"{stem}.meta"] + ([f"{stem}.svg"] if ns.emit_svg else [])
    paths = _prepare_outputs(ns.out_dir, names, ns.force)
    write_csv(paths[0], FIG2_HEADER, _sweep_rows_for_csv(sweep, with_n_flux=False))
    write_meta(paths[1],
               dict(command="fig2", eps=ns.eps, grid_points=ns.grid_points,
                    g_min=ns.g_min, g_max=ns.g_max, n_max=ns.n_max, tol=ns.tol,
                    emit_svg=ns.emit_svg),
               derived=_sweep_derived(sweep))
    if ns.emit_svg:
        render_fig2(sweep.rows, str(paths[2]))
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def _cmd_fig3(ns) -> int:
    from .experiments import run_fig3
    from .plotting import render_fig3

    workers = _resolve_workers(ns.workers)
    grid = _grid_from_ns(ns)
    sweep = run_fig3(g_grid=grid, n_max=ns.n_max, tol=ns.tol, workers=workers)
    names = ["fig3.csv", "fig3.meta"] + (["fig3.svg"] if ns.emit_svg else [])
    paths = _prepare_outputs(ns.out_dir, names, ns.force)
    write_csv(paths[0], FIG3_HEADER, _sweep_rows_for_csv(sweep, with_n_flux=True))
    write_meta(paths[1],
               dict(command="fig3", grid_points=ns.grid_points, g_min=ns.g_min,
                    g_max=ns.g_max, n_max=ns.n_max, tol=ns.tol, emit_svg=ns.emit_svg),
               derived=_sweep_derived(sweep))
    if ns.emit_svg:
        render_fig3(sweep.rows, str(paths[2]))
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def _grid_from_ns(ns):
    from .experiments import default_g_grid

    if ns.grid_points < 2:
        raise CliError("--grid-points must be at least 2")
    if not 0 < ns.g_min < ns.g_max:
        raise CliError("need 0 < --g-min < --g-max")
    return default_g_grid(ns.grid_points, ns.g_min, ns.g_max)


def _sweep_derived(sweep) -> dict:
    rows = sweep.rows
    return dict(
        n_max_used_max=sweep.metadata["n_max_used_max"],
        converged_rows=sum(1 for r in rows if r.converged),
        populated_rows=sum(1 for r in rows if r.t_star is not None),
        total_rows=len(rows),
    )


def _cmd_evolve(ns) -> int:
    import numpy as np

    from .dynamics import Picture, SystemParams, build_generator, evolve
    from .hilbert import (
        LN2,
        atom_excited_density,
        coherent_state,
        excited_vacuum_density,
        tensor,
    )
    from .plotting import render_evolve
    from .thermo import flux_sample

    picture = Picture(ns.picture)
    params = SystemParams(g=ns.g, eps=ns.eps, kappa=ns.kappa, gamma=ns.gamma,
                          n_max=ns.n_max, picture=picture)
    if picture is Picture.EFFECTIVE_ATOM:
        rho0 = atom_excited_density()
    elif picture is Picture.ROTATING_LAB:
        # lab-frame analogue of |e,0> in the displaced frame: coherent field
        # (vacuum when kappa = 0, where no steady field amplitude exists)
        alpha = params.alpha if params.kappa > 0 else 0.0
        field = coherent_state(alpha, ns.n_max)
        rho0 = tensor(atom_excited_density(), np.outer(field, field.conj()))
    else:
        rho0 = excited_vacuum_density(ns.n_max)
    traj = evolve(build_generator(params), rho0, ns.t_end, tol=ns.tol)
    grid = np.linspace(0.0, ns.t_end, ns.samples)

    stem = f"evolve_{ns.picture}"
    names = [f"{stem}.csv", f"{stem}.meta"] + ([f"{stem}.svg"] if ns.emit_svg else [])
    paths = _prepare_outputs(ns.out_dir, names, ns.force)

    if picture is Picture.ROTATING_LAB:
        # the work/heat split is defined in the displaced frame; report the
        # frame-independent observables and leave the flux columns empty
        from .dynamics import expectation
        from .hilbert import SIGMA_Z, partial_trace_field, von_neumann_entropy

        rows = []
        for t in grid:
            rho_at = partial_trace_field(traj.interpolate(t))
            rows.append([t, expectation(rho_at, SIGMA_Z).real,
                         von_neumann_entropy(rho_at) / LN2, None, None])
        samples = None
    else:
        samples = [flux_sample(t, traj.interpolate(t), params) for t in grid]
        rows = [[s.t, s.sigma_z, s.entropy / LN2, s.jw_norm, s.jq_norm] for s in samples]
    write_csv(paths[0], EVOLVE_HEADER, rows)
    write_meta(paths[1],
               dict(command="evolve", picture=ns.picture, g=ns.g, eps=ns.eps,
                    kappa=ns.kappa, gamma=ns.gamma, t_end=ns.t_end,
                    samples=ns.samples, n_max=ns.n_max, tol=ns.tol,
                    emit_svg=ns.emit_svg))
    if ns.emit_svg:
        if samples is None:
            from .thermo import FluxSample

            samples = [FluxSample(t=row[0], jw_norm=0.0, jq_norm=0.0,
                                  entropy=row[2] * LN2, sigma_z=row[1],
                                  re_sigma_plus=0.0, im_sigma_plus=0.0)
                       for row in rows]
            render_evolve(samples, str(paths[2]), fluxes=False)
        else:
            render_evolve(samples, str(paths[2]))
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def _cmd_crossing(ns) -> int:
    from .effective import crossing_point

    result = crossing_point(ns.eps, g_tol=ns.g_tol)
    print(f"g_cross_over_kappa = {format_float(result.g_cross_over_kappa)}")
    print(f"re_sigma_plus_at_tstar = {format_float(result.re_sigma_plus_at_tstar)}")
    print(f"balance_residual = {format_float(result.balance_residual)}")
    return 0


def _cmd_critical_drive(ns) -> int:
    from .effective import critical_drive
    from .experiments import default_g_grid

    workers = _resolve_workers(ns.workers)
    grid = default_g_grid(ns.grid_points, ns.g_min, ns.g_max)
    threshold = critical_drive(ns.lo, ns.hi, resolution=ns.resolution, g_grid=grid,
                               n_max=ns.n_max, tol=ns.tol, workers=workers)
    print(f"eps_critical_over_kappa = {format_float(threshold)}")
    return 0


_HANDLERS = {
    "fig1": _cmd_fig1,
    "fig2": _cmd_fig2,
    "fig3": _cmd_fig3,
    "evolve": _cmd_evolve,
    "crossing": _cmd_crossing,
    "critical-drive": _cmd_critical_drive,
}


def dispatch(argv: list[str]) -> int:
    """Parse arguments (optionally merged with a config file) and run."""
    try:
        argv, config = _extract_config(list(argv))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if argv and argv[0] in ("-h", "--help"):
        print(f"usage: ramsey-thermo COMMAND [flags]  (commands: {', '.join(COMMANDS)})")
        return 0
    if argv and not argv[0].startswith("-"):
        command, rest = argv[0], argv[1:]
    elif "command" in config:
        command, rest = config["command"], argv
    else:
        print(f"error: no command given (expected one of {', '.join(COMMANDS)})", file=sys.stderr)
        return 2
    if command not in COMMANDS:
        print(f"error: unknown command {command!r} (expected one of {', '.join(COMMANDS)})",
              file=sys.stderr)
        return 2

    parser = build_parser(command)
    try:
        _apply_config(parser, config, command)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        ns = parser.parse_args(rest)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        return _HANDLERS[command](ns)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surfaced with context, nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
