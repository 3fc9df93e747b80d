"""Command-line front end.

Exit status: 0 when every check passes, 1 when a check fails (the report is
still written), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import io as sio
from .algebra import DEFAULT_TOL, basis_for, tensors_for, verify_basis, verify_structure_identities
from .errors import SunQSDEError
from .model import (MODEL_KINDS, check_physical_realizability, check_preservation, extract_slh,
                    random_model, synthesize_state_space)
from .oracle import init_moments, integrate_moments, ito_integrands, max_residual
from .theta import ThetaContext, verify_kron_identities, verify_theta_identities

COMMANDS = ("basis", "check-identities", "synth", "check-realizable", "extract-slh",
            "check-preservation", "oracle", "simulate", "random-model")
TOL_ENV = "SUNQSDE_TOL"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    nw: int = 1
    tol: float = DEFAULT_TOL
    seed: int = 0
    inputs: list[str] = field(default_factory=list)
    slh: str | None = None
    rho: str | None = None
    output: str | None = None
    format: str = "json"
    kind: str = "realizable"
    trials: int = 100
    t_end: float = 1.0
    h: float = 1e-3
    max_residual: float = 1e-6
    with_mean: bool = False
    jobs: int = 1

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not (self.tol > 0):
            raise UsageError(f"tol must be positive, got {self.tol}")
        if self.command in ("basis", "check-identities", "random-model") and self.n is None:
            raise UsageError(f"{self.command} requires --n")
        if self.n is not None and self.n < 2:
            raise UsageError(f"--n must be >= 2, got {self.n}")
        if self.nw < 0:
            raise UsageError("--nw must be >= 0")
        if self.trials < 1:
            raise UsageError("--trials must be >= 1")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if self.format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.format == "csv" and self.command != "simulate":
            raise UsageError("csv output is only available for simulate")
        if self.kind not in MODEL_KINDS:
            raise UsageError(f"--kind must be one of {MODEL_KINDS}")


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number") from None


def _read_json(path):
    try:
        if path in (None, "-"):
            text = sys.stdin.read()
        else:
            with open(path) as fh:
                text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        where = "stdin" if path in (None, "-") else path
        raise UsageError(f"malformed JSON in {where}: {exc}") from exc


def validate_model_file(path):
    """Load and validate a model JSON file (``-`` for stdin)."""
    return sio.model_from_dict(_read_json(path))


def _write(cfg, text):
    if cfg.output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(cfg.output, "w") as fh:
            fh.write(text)


def _check_one(command, path, tol):
    model = validate_model_file(path)
    ctx = ThetaContext.for_n(model.n)
    if command == "check-realizable":
        report = check_physical_realizability(ctx, model, tol)
        return report.passed, report.to_dict()
    if command == "check-preservation":
        report = check_preservation(ctx, model, tol)
        return report.passed, report.to_dict()
    integrands = ito_integrands(ctx, model)
    norms = integrands.norms()
    passed = integrands.vanish(tol)
    return passed, {"kind": "ito_oracle", "passed": passed, "tol": tol,
                    "max_norm": integrands.max_norm(), "terms": norms}


def _run_checks(cfg):
    paths = cfg.inputs or ["-"]
    if cfg.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_check_one, [cfg.command] * len(paths), paths, [cfg.tol] * len(paths)))
    else:
        results = [_check_one(cfg.command, p, cfg.tol) for p in paths]
    payload = results[0][1] if len(paths) == 1 else [
        dict(r, source=p) for p, (_, r) in zip(paths, results)]
    _write(cfg, sio.dumps(payload))
    return EXIT_OK if all(ok for ok, _ in results) else EXIT_FAIL


def _identity_report(cfg):
    n = cfg.n
    basis, tensors = basis_for(n), tensors_for(n)
    ctx = ThetaContext.for_n(n)
    report = (verify_basis(basis, tensors, cfg.tol)
              .merged(verify_structure_identities(tensors, cfg.tol))
              .merged(verify_theta_identities(ctx, cfg.trials, cfg.tol, cfg.seed))
              .merged(verify_kron_identities(ctx, min(cfg.trials, 20), cfg.tol, cfg.seed)))
    out = dict(report.to_dict(), n=n, s=tensors.s)
    _write(cfg, sio.dumps(out))
    return EXIT_OK if report.passed else EXIT_FAIL


def _simulate(cfg):
    if not cfg.inputs:
        raise UsageError("simulate requires --model")
    model = validate_model_file(cfg.inputs[0])
    ctx = ThetaContext.for_n(model.n)
    if cfg.rho is None:
        rho = np.zeros((model.n, model.n), dtype=complex)
        rho[0, 0] = 1.0
    else:
        rho = sio.density_from_json(_read_json(cfg.rho), model.n)
    traj = integrate_moments(ctx, model, init_moments(ctx, rho, cfg.tol), cfg.t_end, cfg.h)
    worst = max_residual(traj)
    if cfg.format == "csv":
        _write(cfg, sio.trajectory_to_csv(traj, cfg.with_mean))
    else:
        out = {"kind": "moment_flow", "passed": worst < cfg.max_residual, "max_residual": worst,
               "max_allowed": cfg.max_residual, "t_end": cfg.t_end, "h": cfg.h,
               "trajectory": sio.trajectory_to_dict(traj, cfg.with_mean)}
        _write(cfg, sio.dumps(out))
    return EXIT_OK if worst < cfg.max_residual else EXIT_FAIL


def run(cfg: RunConfig) -> int:
    """Dispatch one command; returns the exit status."""
    cfg.validate()
    cmd = cfg.command
    if cmd == "basis":
        _write(cfg, sio.dumps(tensors_for(cfg.n).to_dict()))
        return EXIT_OK
    if cmd == "check-identities":
        return _identity_report(cfg)
    if cmd == "synth":
        slh = sio.slh_from_dict(_read_json(cfg.slh))
        model = synthesize_state_space(ThetaContext.for_n(slh.n), slh)
        _write(cfg, sio.dumps(sio.model_to_dict(model)))
        return EXIT_OK
    if cmd == "extract-slh":
        model = validate_model_file(cfg.inputs[0] if cfg.inputs else "-")
        slh = extract_slh(ThetaContext.for_n(model.n), model)
        _write(cfg, sio.dumps(sio.slh_to_dict(slh)))
        return EXIT_OK
    if cmd == "random-model":
        model = random_model(ThetaContext.for_n(cfg.n), cfg.nw, cfg.seed, cfg.kind)
        _write(cfg, sio.dumps(sio.model_to_dict(model)))
        return EXIT_OK
    if cmd == "simulate":
        return _simulate(cfg)
    return _run_checks(cfg)


def build_parser():
    parser = argparse.ArgumentParser(prog="sunqsde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol=True):
        p.add_argument("-o", "--output", help="output path (default: stdout)")
        if tol:
            p.add_argument("--tol", type=float, default=None,
                           help=f"tolerance (default: ${TOL_ENV} or {DEFAULT_TOL:g})")
        return p

    p = common(sub.add_parser("basis", help="export structure tensors f, d as JSON"), tol=False)
    p.add_argument("--n", type=int, required=True)

    p = common(sub.add_parser("check-identities", help="run the algebra and Theta identity suites"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = common(sub.add_parser("synth", help="state-space model from an SLH description"), tol=False)
    p.add_argument("--slh", default="-", help="SLH JSON path (default: stdin)")

    for name, text in (("check-realizable", "physical realizability conditions"),
                       ("check-preservation", "commutation/anticommutation preservation"),
                       ("oracle", "brute-force Ito integrands at the generator representation")):
        p = common(sub.add_parser(name, help=text))
        p.add_argument("--model", nargs="+", default=[], help="model JSON path(s) (default: stdin)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for several models")

    p = common(sub.add_parser("extract-slh", help="recover (alpha, Lambda) from a realizable model"),
               tol=False)
    p.add_argument("--model", nargs="?", default="-")

    p = common(sub.add_parser("simulate", help="integrate the moment flow and track relation residuals"))
    p.add_argument("--model", required=True)
    p.add_argument("--rho", help="density matrix JSON (default: projector on the first level)")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--max-residual", type=float, default=1e-6)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--with-mean", action="store_true", help="include <x> columns")

    p = common(sub.add_parser("random-model", help="seeded fixture model"), tol=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nw", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=MODEL_KINDS, default="realizable")
    return parser


def config_from_args(ns) -> RunConfig:
    model = getattr(ns, "model", None)
    inputs = [model] if isinstance(model, str) else list(model or [])
    tol = getattr(ns, "tol", None)
    return RunConfig(
        command=ns.command,
        n=getattr(ns, "n", None),
        nw=getattr(ns, "nw", 1),
        tol=default_tol() if tol is None else tol,
        seed=getattr(ns, "seed", 0),
        inputs=inputs,
        slh=getattr(ns, "slh", None),
        rho=getattr(ns, "rho", None),
        output=ns.output,
        format=getattr(ns, "format", "json"),
        kind=getattr(ns, "kind", "realizable"),
        trials=getattr(ns, "trials", 100),
        t_end=getattr(ns, "t_end", 1.0),
        h=getattr(ns, "h", 1e-3),
        max_residual=getattr(ns, "max_residual", 1e-6),
        with_mean=getattr(ns, "with_mean", False),
        jobs=getattr(ns, "jobs", 1),
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return run(config_from_args(ns))
    except (UsageError, SunQSDEError) as exc:
        print(f"sunqsde {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream reader closed early (e.g. ``| head``)
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
