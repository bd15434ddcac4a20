"""Command line entry point: ``landau-lab simulate | verify | export``.

Exit codes: 0 success, 1 invalid input or I/O failure, 2 blow-up guard,
3 Picard non-contraction, 4 at least one verification check failed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .evolution import BlowUpError, SolverError, positivity_check, run_linear
from .operators import OperatorContext
from .persist import (EXPORT_FORMATS, CheckpointError, dumps_json, read_checkpoint, slice_csv,
                      timeseries_csv, write_checkpoint)
from .picard import NonContractionError, picard_solve
from .samples import initial_field
from .verify import SUITES, SuiteSettings, run_suites, suite_decay

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP, EXIT_NONCONTRACTION, EXIT_CHECKS = 0, 1, 2, 3, 4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _provenance(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.hash(), "code_version": __version__, "package": "landau_lab"}


def settings_from_config(cfg: RunConfig) -> SuiteSettings:
    return SuiteSettings(nx=cfg.nx, nv=cfg.nv, rv=cfg.rv, dim_x=cfg.dim_x, theta=cfg.theta,
                         epsilon=cfg.epsilon, seed=cfg.seed, samples=cfg.samples, dt=cfg.dt,
                         t_end=cfg.t_end, scheme=cfg.scheme, init_kind=cfg.init_kind,
                         amplitude=cfg.amplitude)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {out}: {e.strerror}") from None
    return out


def cmd_simulate(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    grid = cfg.grid
    f0 = initial_field(grid, cfg.init_kind, cfg.amplitude, cfg.seed)
    ctx = OperatorContext(grid)
    diag = {"provenance": _provenance(cfg), "config": cfg.as_dict()}
    try:
        if cfg.picard:
            tol = cfg.picard_tol if cfg.picard_tol > 0 else None
            traj, records = picard_solve(f0, cfg.stepper, tol=tol, max_iter=cfg.picard_max_iter,
                                         theta=cfg.theta, theta_bar=cfg.theta_bar, eps0=cfg.epsilon0,
                                         ctx=ctx)
            diag["picard"] = [{"n": r.n, "delta": r.delta, "converged": r.converged} for r in records]
        else:
            traj = run_linear(f0, ctx, cfg.stepper, theta=cfg.theta)
    except BlowUpError as e:
        _err(str(e))
        diag["status"] = "blow-up"
        (out / "diagnostics.json").write_text(dumps_json(diag))
        return EXIT_BLOWUP
    except NonContractionError as e:
        _err(str(e))
        diag["status"] = "non-contraction"
        diag["picard"] = [{"n": r.n, "delta": r.delta, "converged": r.converged} for r in e.records]
        (out / "diagnostics.json").write_text(dumps_json(diag))
        return EXIT_NONCONTRACTION
    except ValueError as e:
        raise ConfigError(str(e)) from None

    (out / "timeseries.csv").write_text(timeseries_csv(traj))
    for k, (t, f) in enumerate(zip(traj.times, traj.snapshots)):
        if cfg.picard and k % cfg.cadence and k != len(traj.times) - 1:
            continue
        write_checkpoint(out / f"checkpoint_{k:06d}.bin", f, t)
    pos = [positivity_check(f) for f in traj.snapshots]
    diag["status"] = "ok"
    diag["series"] = {
        "t": list(traj.times),
        "l2_0": list(traj.l2_plain),
        "l2_theta": [r.l2_theta for r in traj.reports],
        "sigma_theta": [r.sigma_theta for r in traj.reports],
        "sup_theta": [r.sup_theta for r in traj.reports],
        "energy_theta": [r.energy_theta for r in traj.reports],
    }
    diag["conservation"] = {
        "moment_drift": [d.tolist() for d in traj.moment_drift],
        "max_step_drift": float(np.max(np.abs(traj.step_drift))) if traj.step_drift else 0.0,
    }
    diag["positivity"] = {"min_F": min(p.min_F for p in pos), "passed": all(p.passed for p in pos)}
    diag["checks"] = [c.to_dict() for c in suite_decay(traj)]
    (out / "diagnostics.json").write_text(dumps_json(diag))
    print(f"simulate: {len(traj.times)} samples to t={traj.times[-1]:.6g}; wrote {out}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, suites=None) -> int:
    names = list(suites or cfg.suites)
    out = _outdir(cfg)
    results = run_suites(names, settings_from_config(cfg))
    for r in results:
        print(f"{r.status.upper():4s}  {r.name}")
    failed = [r.name for r in results if r.status == "fail"]
    doc = {"provenance": _provenance(cfg), "config": cfg.as_dict(), "suites": names,
           "checks": [r.to_dict() for r in results], "failed": failed}
    (out / "verify.json").write_text(dumps_json(doc))
    if failed:
        _err(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_CHECKS
    return EXIT_OK


def cmd_export(checkpoint, fmt: str, dest=None, index=None) -> int:
    if fmt not in EXPORT_FORMATS:
        _err(f"unknown format {fmt!r}; supported formats: {', '.join(EXPORT_FORMATS)}")
        return EXIT_INVALID
    f, _ = read_checkpoint(checkpoint)
    text = slice_csv(f, fmt, index)
    if dest is None:
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landau-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="config file (block.key = value lines)")
        s.add_argument("--out", help="output directory, overrides output.dir")
        s.add_argument("--seed", type=int, help="overrides the config seed")
        if name == "verify":
            s.add_argument("--suite", action="append",
                           help="suite name (repeatable), or 'list' to print the available suites")
    e = sub.add_parser("export")
    e.add_argument("checkpoint")
    e.add_argument("--format", default="csv-vcut", help=f"one of {', '.join(EXPORT_FORMATS)}")
    e.add_argument("--out", help="destination CSV (default stdout)")
    e.add_argument("--index", type=int, nargs="+", help="node index of the fixed cut")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            return cmd_export(args.checkpoint, args.format, args.out, args.index)
        if args.command == "verify" and args.suite and "list" in args.suite:
            for n in SUITES:
                print(n)
            return EXIT_OK
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_verify(cfg, args.suite)
    except (ConfigError, CheckpointError, KeyError) as e:
        _err(str(e).strip("'\""))
        return EXIT_INVALID
    except SolverError as e:
        _err(f"linear solver failed: {e}")
        return EXIT_INVALID
    except OSError as e:
        _err(f"I/O failure: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
