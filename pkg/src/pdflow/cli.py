"""Command-line front end: ``pdflow solve | certify | reproduce``.

Exit codes: 0 success, 1 configuration error, 2 run failure (divergence,
no convergence within ``--max-iters``, non-positive-definite metric, or a
failed certificate).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import _backend
from .dynamics import DynamicsParams, Mode, alpha_admissible, default_alpha, euler_solve, rate_bound
from .lagrangian import euclidean_monotonicity
from .metric import (MetricNotPositiveDefinite, build_metric, certify_strong_monotonicity,
                     choose_k, spectral_bounds, threshold_rho)
from .oracle import OracleError, reference_solution
from .problem import (ConvexQuadraticProgram, GeneratorError, all_passed, make_l2_least_squares,
                      make_random_qp, validate)
from .trace import export, fit_geometric_rate, trace_filename

log = logging.getLogger("pdflow")

OUT_ENV = "PDFLOW_OUT"
EXPERIMENTS = ("random_qp", "l2ls", "custom-file")


class ConfigError(ValueError):
    pass


class RunFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    experiment: str = "random_qp"
    seed: int | None = None
    n: int | None = None
    m: int | None = None
    theta: float = 1.0
    hessian_scale: float = 20.0
    program: str | None = None
    mode: str = "metric"
    k_mult: float = 1.0
    k_abs: float | None = None
    alpha: float | str = "auto"
    beta: float = 1.0
    step: float = 1.0
    tol: float = 1e-9
    max_iters: int = 1_000_000
    out: str | None = None
    full_state: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"--experiment must be one of {EXPERIMENTS}")
        if self.mode not in ("euclidean", "metric"):
            raise ConfigError("--mode must be euclidean or metric")
        if self.experiment == "custom-file":
            if not self.program:
                raise ConfigError("--program PATH is required with --experiment custom-file")
        elif self.seed is None:
            raise ConfigError("--seed is required for generated experiments")
        if self.n is None:
            self.n = 50 if self.experiment == "l2ls" else 10
        if self.m is None:
            self.m = 30 if self.experiment == "l2ls" else 5
        if isinstance(self.alpha, str) and self.alpha != "auto":
            try:
                self.alpha = float(self.alpha)
            except ValueError:
                raise ConfigError(f"--alpha must be a number or 'auto', got {self.alpha!r}") from None
        for name in ("beta", "step", "tol", "theta", "hessian_scale"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        if not isinstance(self.alpha, str) and not self.alpha > 0:
            raise ConfigError("--alpha must be positive")
        if self.k_mult < 1:
            raise ConfigError("--k-mult must be >= 1")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise ConfigError("--max-iters must be a nonnegative integer")
        self.max_iters = int(self.max_iters)

    @property
    def out_dir(self):
        return Path(self.out or os.environ.get(OUT_ENV, "pdflow_out"))

    @property
    def seed_label(self):
        return "file" if self.seed is None else str(self.seed)


def load_program(cfg):
    try:
        if cfg.experiment == "random_qp":
            return make_random_qp(cfg.seed, cfg.n, cfg.m, cfg.hessian_scale)
        if cfg.experiment == "l2ls":
            return make_l2_least_squares(cfg.seed, cfg.m, cfg.n, cfg.theta)
        return ConvexQuadraticProgram.load(cfg.program)
    except (ValueError, KeyError, OSError, GeneratorError) as exc:
        raise ConfigError(f"cannot build program: {exc}") from None


def check_program(program):
    checks = validate(program)
    if not all_passed(checks):
        bad = "; ".join(ch.detail for ch in checks if not ch.passed)
        raise ConfigError(f"program violates the standing assumptions: {bad}")
    return checks


def make_metric(program, cfg):
    q1, q2 = spectral_bounds(program.A)
    try:
        if cfg.k_abs is not None:
            return build_metric(program, cfg.k_abs, q1, q2, threshold_rho(program, q1, q2))
        return choose_k(program, cfg.k_mult)
    except MetricNotPositiveDefinite as exc:
        raise RunFailure(str(exc)) from None


def resolve_alpha(cfg, cert):
    if cfg.alpha == "auto":
        return default_alpha(cert) if cert is not None else 1.0
    return float(cfg.alpha)


def run_one(program, cfg, out_dir, stem_experiment=None, z_star=None, spec=None):
    """Solve once and write the trajectory CSV and summary JSON; returns the summary."""
    mode = Mode(cfg.mode)
    cert = None
    if mode is Mode.METRIC:
        spec = spec or make_metric(program, cfg)
        cert = certify_strong_monotonicity(program, spec)
    alpha = resolve_alpha(cfg, cert)
    params = DynamicsParams(alpha=alpha, beta=cfg.beta, step=cfg.step, max_iters=cfg.max_iters,
                            stop_tol=cfg.tol, mode=mode)
    if z_star is None:
        try:
            z_star = reference_solution(program).z_star
        except OracleError as exc:
            log.warning("no reference solution: %s", exc)
    result = euler_solve(program, params, spec=spec, z_star=z_star)

    k_label = None if mode is Mode.EUCLIDEAN else (cfg.k_mult if cfg.k_abs is None else f"abs{cfg.k_abs:g}")
    name = trace_filename(stem_experiment or cfg.experiment, cfg.seed_label, mode.value, k_label)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "status": result.status,
        "message": result.message,
        "iterations": result.iterations,
        "residual": result.residual,
        "final_kkt": result.final_kkt.to_dict(),
        "alpha": alpha,
        "beta": cfg.beta,
        "step": cfg.step,
        "mode": mode.value,
        "backend": result.backend,
        "x": result.final_point.x.tolist(),
        "lambda": result.final_point.lam.tolist(),
    }
    if cert is not None:
        summary["certificate"] = cert.to_dict()
        summary["alpha_admissible"] = bool(alpha_admissible(alpha, cert))
        if summary["alpha_admissible"]:
            summary["rate_bound"] = rate_bound(params, cert)
        else:
            log.warning("alpha = %.3g is not below 4 nu / ell^2; the exponential bound does not apply", alpha)
    if result.trajectory is not None:
        traj = result.trajectory
        export(traj, out_dir / name, full_state=cfg.full_state)
        summary["trajectory_file"] = name
        summary["x_gap_inf"] = float(np.max(np.abs(result.final_point.x - z_star[: program.n])))
        try:
            summary["fitted_rate"] = fit_geometric_rate(traj).to_dict()
        except ValueError as exc:
            summary["fitted_rate"] = None
            log.info("no rate fit: %s", exc)
    (out_dir / (Path(name).stem + "_summary.json")).write_text(json.dumps(summary, indent=1))
    return summary, result


def cmd_solve(cfg):
    program = load_program(cfg)
    check_program(program)
    summary, result = run_one(program, cfg, cfg.out_dir)
    print(json.dumps({k: summary[k] for k in ("status", "iterations", "final_kkt", "alpha")
                      if k in summary} | {"fitted_rate": summary.get("fitted_rate")}, indent=1))
    if result.diverged:
        log.error("diverged: %s", result.message)
        return 2
    if not result.converged:
        log.error("not converged: %s", result.message)
        return 2
    return 0


def cmd_certify(cfg):
    program = load_program(cfg)
    check_program(program)
    if cfg.mode == "euclidean":
        report = euclidean_monotonicity(program).to_dict()
    else:
        spec = make_metric(program, cfg)
        report = certify_strong_monotonicity(program, spec).to_dict()
    text = json.dumps(report, indent=1)
    print(text)
    if cfg.out:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / "certificate.json").write_text(text)
    return 0 if report["passed"] else 2


FIG_DEFAULTS = {
    "fig1": {"experiment": "random_qp", "seed": 1, "n": 10, "m": 5, "max_iters": 200_000},
    "fig2": {"experiment": "random_qp", "seed": 1, "n": 10, "m": 5, "max_iters": 200_000},
    "fig3": {"experiment": "random_qp", "seed": 1, "n": 10, "m": 5},
    "fig4": {"experiment": "l2ls", "seed": 7, "n": 50, "m": 30, "theta": 1.0, "k_mult": 1000.0},
}
FIG_K_MULTS = (1.0, 10.0, 100.0)


def cmd_reproduce(figure, overrides, out=None):
    base = dict(FIG_DEFAULTS[figure])
    base.update({k: v for k, v in overrides.items() if v is not None})
    base.setdefault("out", out)
    cfg = RunConfig(**base)
    out_dir = cfg.out_dir / figure
    program = load_program(cfg)
    check_program(program)
    ref = reference_solution(program)
    manifest = {"figure": figure, "program": program.provenance, "curves": []}
    code = 0

    if figure in ("fig1", "fig2"):
        for km in FIG_K_MULTS:
            c = RunConfig(**{**asdict(cfg), "k_mult": km, "mode": "metric", "alpha": "auto",
                             "step": 1.0 / cfg.beta, "full_state": True})
            summary, result = run_one(program, c, out_dir, "example1", ref.z_star)
            traj = result.trajectory
            manifest["curves"].append({
                "k_multiplier": km, "k": summary["certificate"]["k"], "alpha": summary["alpha"],
                "file": summary["trajectory_file"], "fitted_rate": summary["fitted_rate"],
                "final_primal_error": float(traj.primal_error(ref.x_star)[-1]),
                "final_dual_error": float(traj.dual_error(ref.lambda_star)[-1]),
                "status": summary["status"],
            })
        rates = [cv["fitted_rate"]["rate"] if cv["fitted_rate"] else float("nan") for cv in manifest["curves"]]
        manifest["rates_increasing_in_k"] = bool(all(a < b for a, b in zip(rates, rates[1:])))
    elif figure == "fig3":
        c = RunConfig(**{**asdict(cfg), "mode": "metric", "alpha": "auto"})
        summary, result = run_one(program, c, out_dir, "example1", ref.z_star)
        gap = np.abs(result.final_point.x - ref.x_star)
        lines = ["index,x_dynamics,x_oracle,abs_gap"]
        for i, (xd, xo, g) in enumerate(zip(result.final_point.x, ref.x_star, gap)):
            lines.append(f"{i},{xd:.17g},{xo:.17g},{g:.17g}")
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "solution_table.csv").write_text("\n".join(lines) + "\n")
        manifest["curves"].append({"file": "solution_table.csv", "max_abs_gap": float(gap.max()),
                                   "status": summary["status"]})
        print("\n".join(lines))
        if not (result.converged and gap.max() <= 1e-6):
            code = 2
    else:
        attempts = []
        c = RunConfig(**{**asdict(cfg), "mode": "metric", "alpha": 1.0 if cfg.alpha == "auto" else cfg.alpha,
                         "beta": 1.0, "step": 1.0, "full_state": False})
        spec = make_metric(program, c)
        summary, result = run_one(program, c, out_dir, "example2_alpha1", ref.z_star, spec=spec)
        attempts.append(("unit_alpha", summary, result))
        if result.diverged:
            log.warning("alpha = beta = 1 diverged after %d iterations; retrying with alpha = auto",
                        result.iterations)
            c = RunConfig(**{**asdict(c), "alpha": "auto"})
            summary, result = run_one(program, c, out_dir, "example2_auto", ref.z_star, spec=spec)
            attempts.append(("default_alpha", summary, result))
        for label, s, _ in attempts:
            manifest["curves"].append({"attempt": label, "file": s.get("trajectory_file"), "alpha": s["alpha"],
                                       "status": s["status"], "iterations": s["iterations"],
                                       "final_kkt": s["final_kkt"]["total"], "fitted_rate": s.get("fitted_rate")})
        fit = summary.get("fitted_rate")
        accepted = bool(fit and fit["r_squared"] >= 0.9 and summary["final_kkt"]["total"] <= 1e-6)
        manifest["accepted"] = accepted
        if not accepted:
            code = 2

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))
    print(json.dumps({"figure": figure, "out": str(out_dir), "exit": code}))
    return code


def _add_run_flags(p):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--program", help="program JSON for --experiment custom-file")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--theta", type=float, help="ridge weight for l2ls (default 1.0)")
    p.add_argument("--hessian-scale", dest="hessian_scale", type=float, help="H = scale * I for random_qp (default 20)")
    p.add_argument("--mode", choices=("euclidean", "metric"), help="default metric")
    p.add_argument("--k-mult", dest="k_mult", type=float, help="k = mult * rho (default 1)")
    p.add_argument("--k-abs", dest="k_abs", type=float, help="absolute k, overrides --k-mult")
    p.add_argument("--alpha", help="step inside the projection, number or 'auto' (default auto)")
    p.add_argument("--beta", type=float, help="outer gain (default 1)")
    p.add_argument("--step", type=float, help="Euler step s (default 1)")
    p.add_argument("--tol", type=float, help="stopping tolerance on the projected residual (default 1e-9)")
    p.add_argument("--max-iters", dest="max_iters", type=int, help="iteration cap (default 1e6)")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./pdflow_out)")
    p.add_argument("--full-state", dest="full_state", action="store_true", default=None,
                   help="append x_i and lambda_j columns to trajectory CSVs")


def build_parser():
    parser = argparse.ArgumentParser(prog="pdflow", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("solve", help="generate or load a program and run the dynamics"))
    _add_run_flags(sub.add_parser("certify", help="print the monotonicity certificate"))
    rp = sub.add_parser("reproduce", help="rerun one of the experiment figures")
    rp.add_argument("figure", choices=tuple(FIG_DEFAULTS))
    rp.add_argument("--seed", type=int)
    rp.add_argument("--max-iters", dest="max_iters", type=int)
    rp.add_argument("--out")
    return parser


def config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read --config: {exc}") from None
    names = {f.name for f in fields(RunConfig)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="pdflow: %(levelname)s: %(message)s", stream=sys.stderr)
    log.info("kernel backend: %s", _backend.BACKEND)
    try:
        if args.command == "reproduce":
            return cmd_reproduce(args.figure, {"seed": args.seed, "max_iters": args.max_iters}, args.out)
        cfg = config_from_args(args)
        return cmd_solve(cfg) if args.command == "solve" else cmd_certify(cfg)
    except ConfigError as exc:
        print(f"pdflow: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except RunFailure as exc:
        print(f"pdflow: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
