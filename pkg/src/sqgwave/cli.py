"""Command-line entry point.

Commands (each writes ``<command>_report.json`` plus data files into the output directory)::

    sqgwave solve --config PATH [--out DIR] [--format sqgf|csv]
    sqgwave verify --field PSI_FILE --config PATH [--out DIR]
    sqgwave evolve --field THETA_FILE --config PATH [--T REAL] [--cfl REAL] [--out DIR]
    sqgwave sweep --config PATH --c-list C [C ...] --k-list K [K ...] [--out DIR]
    sqgwave validate-profile --config PATH [--out DIR]

Exit status: 0 success, 2 validation failure, 1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .config import Config, ConfigError, load_config
from .evolve import BlowUpError, PeakAtWindowEdge, run_evolution, travel_diagnostics
from .grid import GridError, make_grid
from .nehari import NoNehariPoint
from .profile import SymmetryError, validate_hypotheses
from .solver import SeedSpec, StallError, solve, sweep
from .verify import TrivialTheta, verify_all

log = logging.getLogger("sqgwave")

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays become Python values, non-finite floats strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_report(out: Path, report: dict) -> Path:
    path = out / f"{report['command']}_report.json"
    path.write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
    return path


def _read_field(path: str, cfg: Config) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"field file not found: {path}")
    if p.suffix.lower() == ".csv":
        values = fio.import_csv(p)
    else:
        ff = fio.import_field(p)
        if (ff.grid.nr, ff.grid.nz, ff.grid.Lr, ff.grid.Lz) != (cfg.grid.nr, cfg.grid.nz, cfg.grid.Lr, cfg.grid.Lz):
            raise UsageError(f"{path}: grid {ff.grid} differs from the configured grid {cfg.grid}")
        values = ff.values
    if values.shape != cfg.grid.shape:
        raise UsageError(f"{path}: field shape {values.shape} differs from the configured grid {cfg.grid.shape}")
    return values


def _write_field(values, cfg: Config, out: Path, stem: str, fmt: str, time=None) -> str:
    if fmt == "csv":
        path = out / f"{stem}.csv"
        fio.export_csv(values, path)
    else:
        path = out / f"{stem}.sqgf"
        fio.export_field(values, cfg.grid, path, time=time)
    return path.name


def _seed(cfg: Config) -> SeedSpec:
    return SeedSpec(r0=cfg["init.r0"], A=cfg["init.A"], sigma=cfg["init.sigma"], ladder=cfg["init.ladder"])


def _solve_summary(rep) -> dict:
    return {
        "converged": rep.converged,
        "iterations": rep.iterations,
        "energy": rep.energy,
        "residual_rel": rep.residual_history[-1] if rep.residual_history else None,
        "grad_rel": rep.grad_history[-1] if rep.grad_history else None,
        "error": rep.error,
        "wave": {"c": rep.wave.c, "k": rep.wave.k} if rep.wave else None,
        "diagnostics": rep.diagnostics,
    }


def _emit_solution(rep, cfg, ws, p, out: Path, fmt: str, stem_suffix: str = "") -> dict:
    from . import plotting

    files = {
        "psi": _write_field(rep.psi, cfg, out, "psi" + stem_suffix, fmt),
        "theta": _write_field(rep.theta, cfg, out, "theta" + stem_suffix, fmt),
    }
    hist = out / f"history{stem_suffix}.csv"
    n = len(rep.residual_history)
    rows = np.full((max(n, len(rep.energy_history)), 4), np.nan)
    rows[:, 0] = np.arange(rows.shape[0])
    rows[: len(rep.energy_history), 1] = rep.energy_history
    rows[:n, 2] = rep.residual_history
    rows[: len(rep.grad_history), 3] = rep.grad_history
    np.savetxt(hist, rows, fmt="%.17g", delimiter=",", header="step,energy,residual_rel,grad_rel", comments="")
    files["history"] = hist.name
    for name, v in (("theta", rep.theta), ("psi", rep.psi)):
        fio.render_heatmap(v, out / f"{name}{stem_suffix}.pgm")
        files[f"{name}_heatmap"] = f"{name}{stem_suffix}.pgm"
        plotting.plot_field(v, cfg.grid, out / f"{name}{stem_suffix}.png", title=name)
        files[f"{name}_figure"] = f"{name}{stem_suffix}.png"
    plotting.plot_history(rep.energy_history, rep.residual_history, rep.grad_history,
                          out / f"history{stem_suffix}.png")
    files["history_figure"] = f"history{stem_suffix}.png"
    return files


def _verify_dict(ws, psi, p, wave) -> tuple[dict, bool]:
    try:
        vr = verify_all(ws, psi, p, wave)
    except TrivialTheta as exc:
        return {"error": f"TrivialTheta: {exc}", "passed": False}, False
    return vr.to_dict(), vr.passed


def cmd_solve(args, cfg: Config, out: Path) -> int:
    ws, p, wave = make_grid(cfg.grid), cfg.profile, cfg.wave
    rep, _ = solve(ws, p, wave, cfg.solve_options, _seed(cfg))
    files = _emit_solution(rep, cfg, ws, p, out, args.format)
    verify, vpass = _verify_dict(ws, rep.psi, p, wave)
    write_report(out, {"command": "solve", "config": cfg.resolved(), "solve": _solve_summary(rep),
                       "verify": verify, "files": files})
    print(f"solve: converged={rep.converged} iterations={rep.iterations} E={rep.energy:.10g} "
          f"residual={rep.residual_history[-1]:.3e} verify_passed={vpass}")
    return EXIT_OK if rep.converged else EXIT_INVALID


def cmd_verify(args, cfg: Config, out: Path) -> int:
    ws = make_grid(cfg.grid)
    psi = _read_field(args.field, cfg)
    try:
        verify, passed = _verify_dict(ws, psi, cfg.profile, cfg.wave)
    except SymmetryError as exc:
        verify, passed = {"error": f"SymmetryError: {exc}", "passed": False}, False
    write_report(out, {"command": "verify", "config": cfg.resolved(), "field": Path(args.field).name,
                       "verify": verify})
    if "error" in verify:
        print(f"verify: {verify['error']}")
    else:
        failed = sorted(k for k, v in verify["checks"].items() if not v)
        print(f"verify: residual={verify['residual_rel']:.3e} passed={passed}"
              + (f" failed={','.join(failed)}" if failed else ""))
    return EXIT_OK if passed else EXIT_INVALID


def cmd_evolve(args, cfg: Config, out: Path) -> int:
    from . import plotting

    ws = make_grid(cfg.grid)
    theta0 = _read_field(args.field, cfg)
    try:
        opts = cfg.evolve_options(T=args.T, cfl=args.cfl)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    c = cfg.wave.c
    report = {"command": "evolve", "config": cfg.resolved(), "field": Path(args.field).name,
              "evolve": {"T": opts.T, "cfl": opts.cfl, "dealias": opts.dealias}}
    try:
        _, traj = run_evolution(ws, theta0, opts)
        ref = traj.snapshots[0]
        diag = travel_diagnostics(ws, traj.times, traj.snapshots, ref, c)
    except (BlowUpError, PeakAtWindowEdge) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        write_report(out, report)
        print(f"evolve: {report['error']}")
        return EXIT_INVALID
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    names = [str(Path("snapshots") / _write_field(v, cfg, snap_dir, f"theta_{i:04d}", args.format, time=t))
             for i, (t, v) in enumerate(zip(traj.times, traj.snapshots))]
    plotting.plot_travel(diag.times, diag.shift, diag.shape_error, c, out / "travel.png")
    fio.render_heatmap(traj.snapshots[-1], out / "theta_final.pgm")
    speed_ok = abs(diag.fitted_speed - c) <= 0.02 * c
    shape_ok = float(np.max(diag.shape_error)) < 5e-2
    report["evolve"].update(steps=traj.steps, diagnostics=diag.to_dict(),
                            checks={"speed_within_2pct": speed_ok, "shape_error_below_5e-2": shape_ok})
    report["files"] = {"snapshots": names, "travel_figure": "travel.png", "theta_final_heatmap": "theta_final.pgm"}
    write_report(out, report)
    print(f"evolve: steps={traj.steps} fitted_speed={diag.fitted_speed:.6g} (c={c:g}) "
          f"max_shape_error={np.max(diag.shape_error):.3e} l2_drift={diag.l2_drift:.3e}")
    return EXIT_OK if speed_ok and shape_ok else EXIT_INVALID


def cmd_sweep(args, cfg: Config, out: Path) -> int:
    ws, p = make_grid(cfg.grid), cfg.profile
    if any(not (v > 0 and math.isfinite(v)) for v in args.c_list + args.k_list):
        raise UsageError("all c and k values must be positive and finite")
    reps = sweep(ws, p, args.c_list, args.k_list, cfg.solve_options, _seed(cfg))
    cases = []
    for i, rep in enumerate(reps):
        entry = _solve_summary(rep)
        if rep.error is None:
            entry["files"] = _emit_solution(rep, cfg, ws, p, out, args.format, stem_suffix=f"_{i:03d}")
            entry["verify"], _ = _verify_dict(ws, rep.psi, p, rep.wave)
        cases.append(entry)
        print(f"sweep case {i}: c={rep.wave.c:g} k={rep.wave.k:g} converged={rep.converged} "
              f"E={rep.energy:.8g} iterations={rep.iterations}" + (f" error={rep.error}" if rep.error else ""))
    write_report(out, {"command": "sweep", "config": cfg.resolved(), "c_list": args.c_list,
                       "k_list": args.k_list, "cases": cases})
    return EXIT_OK if all(r.converged for r in reps) else EXIT_INVALID


def cmd_validate_profile(args, cfg: Config, out: Path) -> int:
    hr = validate_hypotheses(cfg.profile)
    write_report(out, {"command": "validate-profile", "config": cfg.resolved(),
                       "checks": hr.checks, "fitted_nu": hr.fitted_nu, "details": hr.details,
                       "passed": hr.passed})
    for name, ok in sorted(hr.checks.items()):
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    print(f"fitted nu = {hr.fitted_nu:.4f}")
    return EXIT_OK if hr.passed else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqgwave", description="Travelling-wave solver for the SQG equation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, field=False):
        sp.add_argument("--config", required=True, help="flat key = value configuration file")
        sp.add_argument("--out", help="output directory (default: output.dir from the config)")
        if field:
            sp.add_argument("--field", required=True, help="input field file (.sqgf or .csv)")
        return sp

    sp = common(sub.add_parser("solve", help="compute a travelling wave"))
    sp.add_argument("--format", choices=("sqgf", "csv"), default="sqgf")
    common(sub.add_parser("verify", help="verify a stream function Psi"), field=True)
    sp = common(sub.add_parser("evolve", help="evolve a vorticity field Theta under SQG"), field=True)
    sp.add_argument("--T", type=float, help="final time (default 2/c)")
    sp.add_argument("--cfl", type=float)
    sp.add_argument("--format", choices=("sqgf", "csv"), default="sqgf")
    sp = common(sub.add_parser("sweep", help="solve over a (c, k) grid"))
    sp.add_argument("--c-list", type=float, nargs="+", required=True)
    sp.add_argument("--k-list", type=float, nargs="+", required=True)
    sp.add_argument("--format", choices=("sqgf", "csv"), default="sqgf")
    common(sub.add_parser("validate-profile", help="check the profile hypotheses"))
    return parser


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "evolve": cmd_evolve, "sweep": cmd_sweep,
            "validate-profile": cmd_validate_profile}


def run_command(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"sqgwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        out = Path(args.out if args.out else cfg["output.dir"])
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, out)
    except (UsageError, ConfigError, GridError, fio.FieldFileError, OSError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        print(f"sqgwave: error [{code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoNehariPoint, StallError) as exc:
        print(f"sqgwave: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
