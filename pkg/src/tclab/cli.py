"""Command-line front end: ``tclab <command> [options]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import fit_linear_distance, fit_power_derivative, sweep
from .attractor import sample_curve
from .config import Config, build
from .critical import find_alpha_c, verify_chain
from .dynamics import SystemParams, forcing_grid
from .errors import ConfigError, InsufficientWindow, NonePass, TclabError
from .io import fmt, now, write_csv, write_json, write_manifest
from .lemmas import CALIBRATION_CANDIDATES, VerifierGrid, calibrate_lambda, verify_all

CURVE_COLUMNS = ["theta", "psi", "dpsi_dtheta", "dpsi_dbeta", "depth", "residual", "converged"]
PROFILE_COLUMNS = ["theta", "c", "dc_dtheta", "dc_dbeta"]
SWEEP_COLUMNS = ["beta", "one_minus_beta", "delta", "argmin_theta", "sup_deriv",
                 "argmax_theta", "lyapunov", "depth", "M_C", "T1_bound", "scale_n"]
LEMMA_COLUMNS = ["lemma_id", "passed", "worst_margin", "samples", "note"]
ATTRACTOR_GRID = 1024
PROFILE_GRID = 4096


class Run:
    """Shared state of one command invocation."""

    def __init__(self, command, cfg: Config, out_dir, threads):
        self.command = command
        self.cfg = cfg
        self.out = Path(out_dir)
        self.threads = threads
        self.started = now()
        self.omega = cfg.rotation()
        self.extra = {"rotation": self.omega.to_dict()}
        self.out.mkdir(parents=True, exist_ok=True)

    @property
    def lam(self):
        return self.cfg.lam_or_default()

    def alpha(self):
        if self.cfg.alpha != "auto":
            return float(self.cfg.alpha)
        res = find_alpha_c(self.lam, omega=self.omega, threads=self.threads)
        self.extra["alpha_c"] = res.alpha_c
        return res.alpha_c

    def params(self, alpha, beta=None):
        beta = self.cfg.beta if beta is None else beta
        return SystemParams(alpha=alpha, beta=float(beta), lam=self.lam, omega=self.omega)

    def finish(self, outputs):
        cfg = self.cfg.to_dict()
        cfg["lambda"] = self.lam
        write_manifest(self.out, self.command, cfg, self.started, outputs,
                       extra=self.extra, version=__version__)


def cmd_attractor(run: Run):
    params = run.params(run.alpha())
    n = run.cfg.grid_n or ATTRACTOR_GRID
    curve = sample_curve((n, 0), params, tol=run.cfg.depth_tol, threads=run.threads)
    rows = zip(curve.thetas, curve.psi, curve.dpsi_dtheta, curve.dpsi_dbeta,
               curve.depth, curve.residual, curve.converged)
    write_csv(run.out / "curve.csv", CURVE_COLUMNS, rows)
    run.extra["converged_points"] = int(np.sum(curve.converged))
    run.finish(["curve.csv"])
    return 0


def cmd_profile(run: Run):
    params = run.params(run.alpha())
    n = run.cfg.grid_n or PROFILE_GRID
    thetas = np.arange(n) / n
    c, ct, cb = forcing_grid(thetas, params)
    write_csv(run.out / "profile.csv", PROFILE_COLUMNS, zip(thetas, c, ct, cb))
    run.finish(["profile.csv"])
    return 0


def cmd_find_alpha(run: Run):
    if run.cfg.lam is None:
        raise ConfigError("lambda", "required for find-alpha (flag --lambda or config key)")
    res = find_alpha_c(run.lam, tol_alpha=1e-14, omega=run.omega, threads=run.threads)
    report = verify_chain(res, omega=run.omega, strict=False)
    out = res.to_dict()
    out["chain_check"] = report.to_dict()
    write_json(run.out / "alpha_c.json", out)
    run.extra["alpha_c"] = res.alpha_c
    run.finish(["alpha_c.json"])
    return 0 if report.passed else 1


def cmd_sweep(run: Run):
    alpha = run.alpha()
    base = run.params(alpha, beta=0.0)
    records, dropped = sweep(run.cfg.betas(), alpha, base, tol=run.cfg.depth_tol,
                             seed=run.cfg.seed, threads=run.threads)
    rows = [[r.beta, r.one_minus_beta, r.delta, r.argmin_theta, r.sup_deriv,
             r.argmax_theta, r.lyapunov, r.depth, r.M_C, r.T1_bound, r.scale_index_n]
            for r in records]
    write_csv(run.out / "sweep.csv", SWEEP_COLUMNS, rows)
    fits = {"alpha_c": alpha, "dropped": [{"beta": d.beta, "reason": d.reason} for d in dropped]}
    for name, fit in (("distance", lambda: fit_linear_distance(records, base)),
                      ("derivative", lambda: fit_power_derivative(records))):
        try:
            fits[name] = fit().to_dict()
        except InsufficientWindow as exc:
            fits[name] = {"error": str(exc)}
    write_json(run.out / "fits.json", fits)
    run.finish(["sweep.csv", "fits.json"])
    return 0


def _grid(cfg):
    return VerifierGrid.scaled(cfg.grid_n, cfg.seed) if cfg.grid_n else VerifierGrid(seed=cfg.seed)


def _lemma_rows(reports):
    return [[r.lemma_id, r.passed, r.worst_margin, r.samples, r.note] for r in reports]


def cmd_verify(run: Run):
    alpha = None if run.cfg.alpha == "auto" else float(run.cfg.alpha)
    reports = verify_all(run.lam, run.omega, alpha=alpha, grid=_grid(run.cfg),
                         threads=run.threads)
    write_csv(run.out / "lemmas.csv", LEMMA_COLUMNS, _lemma_rows(reports))
    failed = [r.lemma_id for r in reports if not r.passed]
    summary = {
        "lambda": run.lam,
        "passed": not failed,
        "failed": failed,
        "lemmas": [r.row() for r in reports],
    }
    write_json(run.out / "summary.json", summary)
    run.finish(["lemmas.csv", "summary.json"])
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
    return 1 if failed else 0


def cmd_calibrate(run: Run):
    candidates = sorted(run.cfg.lambda_candidates or CALIBRATION_CANDIDATES)
    try:
        cal = calibrate_lambda(candidates, run.omega, grid=_grid(run.cfg), threads=run.threads)
        chosen, table, code = cal.lam, cal.table, 0
    except NonePass as exc:
        chosen, table, code = None, exc.table, 1
    rows = [[lam] + row for lam, reports in table.items() for row in _lemma_rows(reports)]
    write_csv(run.out / "calibration.csv", ["lambda"] + LEMMA_COLUMNS, rows)
    write_json(run.out / "calibration.json", {
        "candidates": candidates,
        "lambda": chosen,
        "failed": {fmt(lam): [r.lemma_id for r in reports if not r.passed]
                   for lam, reports in table.items()},
    })
    run.finish(["calibration.csv", "calibration.json"])
    return code


COMMANDS = {
    "attractor": cmd_attractor,
    "profile": cmd_profile,
    "find-alpha": cmd_find_alpha,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "calibrate": cmd_calibrate,
}


def _alpha_arg(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number or 'auto'") from None


def parser():
    ap = argparse.ArgumentParser(prog="tclab", description=__doc__)
    ap.add_argument("--version", action="version", version=f"tclab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat JSON config (or a manifest.json)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--alpha", type=_alpha_arg, help="number or 'auto'")
        p.add_argument("--grid", type=int)
        p.add_argument("--depth-tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="worker threads (env TCLAB_THREADS)")
    return ap


def main(argv=None):
    args = parser().parse_args(argv)
    overrides = {
        "lambda": args.lam, "beta": args.beta, "alpha": args.alpha,
        "grid_n": args.grid, "depth_tol": args.depth_tol, "seed": args.seed,
    }
    try:
        cfg = build(args.config, overrides)
        run = Run(args.command, cfg, args.out, args.threads)
        return COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TclabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
