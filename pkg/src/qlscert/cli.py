"""Command-line interface: ``qlscert {validate,hinf,certify,check,simulate}``.

Exit codes are a stable contract: 0 success, 1 infeasible or failed check,
2 input error, 3 perturbation outside the sector class.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import fock
from .bounded_real import hinf_norm
from .certifier import certify, verify_certificate
from .exceptions import InfeasibleError, InputError, ModelValidationError, NotHurwitzError, QLSError
from .io import (
    SimConfig,
    certificate_from_dict,
    certificate_to_dict,
    infeasible_to_dict,
    load_json,
    load_model,
    load_sim_config,
    model_hash,
    write_trajectory_csv,
)
from .model import build_barB, build_barC, build_F, check_model, validate_model, validate_perturbation
from .scaling import search

__all__ = ["main", "build_parser"]

logger = logging.getLogger("qlscert")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_SECTOR = 3


def _emit(data, out=None):
    text = json.dumps(data, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _input_error(exc):
    payload = {"error": str(exc)}
    if getattr(exc, "location", None):
        payload["location"] = exc.location
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return EXIT_INPUT


def _load_valid_model(path):
    model, pert = load_model(path)
    return check_model(model, pert), pert


def _load_certificate(path, model, pert):
    data = load_json(path)
    cert = certificate_from_dict(data)
    stated = data.get("model_hash")
    if stated is not None and stated != model_hash(model, pert):
        raise InputError("certificate was issued for a different model (hash mismatch)", str(path))
    m = 2 * model.n
    if np.asarray(cert.P).shape != (m, m):
        raise InputError(f"P has shape {np.asarray(cert.P).shape}, model needs {(m, m)}", str(path))
    return cert


def cmd_validate(args):
    try:
        model, pert = load_model(args.model)
    except InputError as exc:
        return _input_error(exc)
    violations = list(validate_model(model).violations)
    if pert is not None:
        violations += validate_perturbation(pert).violations
    _emit({"valid": not violations, "violations": violations, "n": int(model.n)})
    return EXIT_OK if not violations else EXIT_FAIL


def cmd_hinf(args):
    model, pert = _load_valid_model(args.model)
    if pert is None:
        raise InputError("model has no perturbation block", args.model)
    F = build_F(model)
    if args.tau is not None:
        tau1, tau3, tau4 = args.tau
        try:
            res = hinf_norm(F, build_barB(model, tau1, tau3, tau4, pert), build_barC(model, tau1, tau3, tau4, pert))
        except NotHurwitzError as exc:
            _emit({"hurwitz": False, "detail": str(exc)}, args.out)
            return EXIT_FAIL
        _emit(
            {
                "hurwitz": True,
                "tau": [tau1, tau3, tau4],
                "norm": res.norm,
                "peak_frequency": res.peak_frequency,
                "grid_norm": res.grid_norm,
            },
            args.out,
        )
        return EXIT_OK
    outcome = search(
        model,
        pert,
        grid_decades=args.grid_decades,
        points_per_decade=args.points_per_decade,
        refine_iters=args.refine_iters,
        margin=args.margin,
    )
    _emit(
        {
            "hurwitz": outcome.reason != "Hurwitz condition failed",
            "feasible": outcome.feasible,
            "tau": list(outcome.best.as_tuple()),
            "norm": outcome.best_norm if np.isfinite(outcome.best_norm) else None,
            "evaluations": outcome.evaluations,
            "reason": outcome.reason,
        },
        args.out,
    )
    return EXIT_OK if outcome.feasible else EXIT_FAIL


def cmd_certify(args):
    model, pert = _load_valid_model(args.model)
    if pert is None:
        raise InputError("model has no perturbation block", args.model)
    try:
        cert = certify(
            model,
            pert,
            grid_decades=args.grid_decades,
            points_per_decade=args.points_per_decade,
            refine_iters=args.refine_iters,
            margin=args.margin,
            decay_fraction=args.decay_fraction,
            tau_policy=args.tau_policy,
        )
    except InfeasibleError as exc:
        logger.info("infeasible: %s", exc)
        _emit(infeasible_to_dict(exc, model, pert), args.out)
        return EXIT_FAIL
    _emit(certificate_to_dict(cert, model, pert), args.out)
    return EXIT_OK


def cmd_check(args):
    model, pert = _load_valid_model(args.model)
    if pert is None:
        raise InputError("model has no perturbation block", args.model)
    cert = _load_certificate(args.cert, model, pert)
    try:
        report = verify_certificate(model, pert, cert)
    except ValueError as exc:
        raise InputError(str(exc), args.cert) from exc
    _emit(report.to_dict(), args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def _sim_config(args):
    cfg = load_sim_config(args.config) if args.config else SimConfig()
    for key in ("cutoff", "guard", "T", "steps", "slack", "seed"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    if args.state is not None:
        params = json.loads(args.state_params) if args.state_params else {}
        cfg.rho0 = {"kind": args.state, "params": params}
    return cfg


def cmd_simulate(args):
    model, pert = _load_valid_model(args.model)
    if pert is None or pert.poly is None:
        raise InputError("simulation needs perturbation.poly (a concrete f)", args.model)
    cert = _load_certificate(args.cert, model, pert)
    try:
        cfg = _sim_config(args)
    except json.JSONDecodeError as exc:
        raise InputError(f"--state-params is not valid JSON: {exc.msg}") from exc
    rep = fock.build_fock_rep(model, pert, cutoff=cfg.cutoff, guard_depth=cfg.guard)
    sector = fock.check_sector_bounds(rep)
    result = {
        "sector": {"ok": sector.ok, "lambda_min": sector.lambda_min, "note": sector.note},
    }
    if not sector.ok and not args.force:
        result["error"] = "perturbation outside W2"
        _emit(result)
        return EXIT_SECTOR

    T = cfg.T if cfg.T is not None else 10.0 / cert.c2
    rho0 = fock.initial_state(rep, cfg.rho0["kind"], cfg.rho0.get("params"), seed=cfg.seed)
    traj = fock.simulate_lindblad(rep, cert.P, rho0, T, cfg.steps)
    if args.out:
        write_trajectory_csv(traj, args.out)
    bound = fock.verify_bound(traj, cert, slack=cfg.slack)
    result.update(
        {
            "bound": bound.to_dict(),
            "T": T,
            "steps": cfg.steps,
            "cutoff": rep.cutoff,
            "guard": rep.guard,
            "rho0": cfg.rho0,
            "max_trace_err": float(traj.trace_err.max()),
            "cross_check_error": traj.cross_check_error,
        }
    )
    if not sector.ok:
        result["warning"] = "perturbation outside W2; bound verdict is informational only"
        _emit(result)
        return EXIT_SECTOR
    _emit(result)
    return EXIT_OK if bound.passed else EXIT_FAIL


def _add_search_flags(p):
    p.add_argument("--grid-decades", type=float, default=5.0)
    p.add_argument("--points-per-decade", type=int, default=3)
    p.add_argument("--refine-iters", type=int, default=6)
    p.add_argument("--margin", type=float, default=1e-3)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qlscert",
        description="Robust mean square stability certificates for perturbed linear quantum systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("hinf", help="scaled H-infinity norm, pinned or searched")
    p.add_argument("--model", required=True)
    p.add_argument("--tau", type=float, nargs=3, metavar=("TAU1", "TAU3", "TAU4"))
    p.add_argument("--out")
    _add_search_flags(p)
    p.set_defaults(func=cmd_hinf)

    p = sub.add_parser("certify", help="search, solve and emit a certificate")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    _add_search_flags(p)
    p.add_argument("--decay-fraction", type=float, default=0.5)
    p.add_argument("--tau-policy", choices=("default", "optimize-c3"), default="default")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("check", help="re-verify a certificate against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--cert", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="Lindblad simulation against the certified bounds")
    p.add_argument("--model", required=True)
    p.add_argument("--cert", required=True)
    p.add_argument("--config", help="simulation config JSON")
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--cutoff", type=int)
    p.add_argument("--guard", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--slack", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--state", choices=("fock", "coherent", "thermal", "random"))
    p.add_argument("--state-params", help='JSON object, e.g. \'{"alpha": 0.5}\'')
    p.add_argument("--force", action="store_true", help="simulate even outside the sector class")
    p.set_defaults(func=cmd_simulate)
    return parser


def _configure_logging():
    level = os.environ.get("QLS_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ModelValidationError) as exc:
        return _input_error(exc)
    except QLSError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
