"""JSON and CSV formats for models, certificates, trajectories and simulation configs.

Complex scalars are always stored as two-element ``[re, im]`` arrays and
matrices as row-major nested lists of such pairs.
"""

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .certifier import StabilityCertificate
from .exceptions import InputError
from .model import PerturbationSpec, QuantumLinearModel

__all__ = [
    "SimConfig",
    "complex_from_json",
    "complex_to_json",
    "matrix_from_json",
    "matrix_to_json",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
    "model_hash",
    "certificate_to_dict",
    "infeasible_to_dict",
    "certificate_from_dict",
    "load_json",
    "dump_json",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "load_sim_config",
]

MODEL_KEYS = ("M1", "M2", "N1", "N2", "E1", "E2")
TRAJECTORY_HEADER = ("t", "expV", "expNumber", "trace_err")


def complex_to_json(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(value, where="value"):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re, im = value
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (re, im)):
            return complex(re, im)
    raise InputError(f"expected a complex number as [re, im], got {value!r}", where)


def matrix_to_json(A):
    A = np.atleast_2d(np.asarray(A, complex))
    return [[complex_to_json(z) for z in row] for row in A]


def matrix_from_json(value, where="matrix"):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise InputError("expected a non-empty list of rows", where)
    width = len(value[0])
    rows = []
    for i, row in enumerate(value):
        if len(row) != width:
            raise InputError(f"row {i} has {len(row)} entries, expected {width}", where)
        rows.append([complex_from_json(z, f"{where}[{i}][{j}]") for j, z in enumerate(row)])
    return np.array(rows, dtype=complex)


def _real(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"expected a real number, got {value!r}", where)
    return float(value)


def model_from_dict(data):
    """Parse the model layout into ``(QuantumLinearModel, PerturbationSpec or None)``."""
    if not isinstance(data, dict):
        raise InputError("top level must be an object", "$")
    missing = [k for k in MODEL_KEYS if k not in data]
    if missing:
        raise InputError(f"missing keys {missing}", "$")
    blocks = {k: matrix_from_json(data[k], f"$.{k}") for k in MODEL_KEYS}
    if "n" in data:
        n = data["n"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise InputError(f"n must be a positive integer, got {n!r}", "$.n")
        if blocks["M1"].shape[0] != n:
            raise InputError(f"n = {n} but M1 has {blocks['M1'].shape[0]} rows", "$.n")
    model = QuantumLinearModel(**blocks)
    pert = None
    if data.get("perturbation") is not None:
        p = data["perturbation"]
        if not isinstance(p, dict) or "gamma" not in p:
            raise InputError("perturbation must be an object with gamma", "$.perturbation")
        kwargs = {"gamma": _real(p["gamma"], "$.perturbation.gamma")}
        for key in ("delta1", "delta2", "delta3"):
            if key in p:
                kwargs[key] = _real(p[key], f"$.perturbation.{key}")
        if p.get("poly") is not None:
            if not isinstance(p["poly"], list):
                raise InputError("poly must be a list of [re, im]", "$.perturbation.poly")
            kwargs["poly"] = [
                complex_from_json(z, f"$.perturbation.poly[{k}]") for k, z in enumerate(p["poly"])
            ]
        pert = PerturbationSpec(**kwargs)
    return model, pert


def model_to_dict(model, pert=None):
    data = {"n": int(model.n)}
    for key in MODEL_KEYS:
        data[key] = matrix_to_json(getattr(model, key))
    if pert is not None:
        p = {
            "gamma": float(pert.gamma),
            "delta1": float(pert.delta1),
            "delta2": float(pert.delta2),
            "delta3": float(pert.delta3),
        }
        if pert.poly is not None:
            p["poly"] = [complex_to_json(z) for z in pert.poly]
        data["perturbation"] = p
    return data


def load_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from exc


def dump_json(data, path):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_model(path):
    data = load_json(path)
    try:
        return model_from_dict(data)
    except InputError as exc:
        raise InputError(str(exc), str(path)) from exc


def save_model(path, model, pert=None):
    dump_json(model_to_dict(model, pert), path)


def model_hash(model, pert=None):
    """SHA-256 of the canonical JSON encoding of the parsed model.

    Formatting of the source file does not affect the hash; any change to a
    number does.
    """
    blob = json.dumps(model_to_dict(model, pert), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _plain(value):
    """Convert numpy scalars and arrays, and complex values, to JSON-native types."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return matrix_to_json(value) if value.ndim == 2 else [complex_to_json(z) for z in value]
        return value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return complex_to_json(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def _timestamp(created):
    if created is not None:
        return created
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def certificate_to_dict(cert, model, pert, created=None):
    return {
        "feasible": True,
        "model_hash": model_hash(model, pert),
        "created": _timestamp(created),
        "tau": [float(t) for t in cert.tau],
        "P": matrix_to_json(cert.P),
        "mu": complex_to_json(cert.mu),
        "lambda_tilde": float(cert.lambda_tilde),
        "lambda": float(cert.lam),
        "c": float(cert.c),
        "c1": float(cert.c1),
        "c2": float(cert.c2),
        "c3": float(cert.c3),
        "hinf": float(cert.hinf),
        "qmi_lambda_max": float(cert.qmi_lambda_max),
        "diagnostics": _plain(cert.diagnostics),
    }


def infeasible_to_dict(error, model, pert, created=None):
    return {
        "feasible": False,
        "model_hash": model_hash(model, pert),
        "created": _timestamp(created),
        "reason": error.reason,
        "detail": error.detail,
        "diagnostics": _plain(error.diagnostics),
    }


def certificate_from_dict(data):
    """Rebuild a :class:`StabilityCertificate` from its JSON layout."""
    if not isinstance(data, dict):
        raise InputError("certificate must be an object", "$")
    if not data.get("feasible", False):
        raise InputError("certificate is marked infeasible", "$.feasible")
    keys = ("tau", "P", "mu", "lambda_tilde", "lambda", "c", "c1", "c2", "c3", "hinf", "qmi_lambda_max")
    missing = [k for k in keys if k not in data]
    if missing:
        raise InputError(f"missing keys {missing}", "$")
    tau = data["tau"]
    if not isinstance(tau, list) or len(tau) != 5:
        raise InputError("tau must list five numbers", "$.tau")
    return StabilityCertificate(
        tau=tuple(_real(t, f"$.tau[{k}]") for k, t in enumerate(tau)),
        P=matrix_from_json(data["P"], "$.P"),
        mu=complex_from_json(data["mu"], "$.mu"),
        lambda_tilde=_real(data["lambda_tilde"], "$.lambda_tilde"),
        lam=_real(data["lambda"], "$.lambda"),
        c=_real(data["c"], "$.c"),
        c1=_real(data["c1"], "$.c1"),
        c2=_real(data["c2"], "$.c2"),
        c3=_real(data["c3"], "$.c3"),
        qmi_lambda_max=_real(data["qmi_lambda_max"], "$.qmi_lambda_max"),
        hinf=_real(data["hinf"], "$.hinf"),
        diagnostics=dict(data.get("diagnostics") or {}),
    )


def write_trajectory_csv(traj, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for row in zip(traj.times, traj.expV, traj.expNumber, traj.trace_err):
            writer.writerow([repr(float(v)) for v in row])


def read_trajectory_csv(path):
    """Return the columns of a trajectory CSV as a dict of arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRAJECTORY_HEADER:
            raise InputError(f"unexpected header {header}", str(path))
        rows = np.array([[float(v) for v in row] for row in reader])
    return {name: rows[:, k] for k, name in enumerate(header)}


@dataclass
class SimConfig:
    """Simulation settings; ``T = None`` means ``10 / c2`` of the certificate."""

    cutoff: int = 12
    guard: int = None
    T: float = None
    steps: int = 200
    rho0: dict = field(default_factory=lambda: {"kind": "fock", "params": {"n": 1}})
    slack: float = 1e-6
    seed: int = None


def load_sim_config(path):
    data = load_json(path)
    if not isinstance(data, dict):
        raise InputError("simulation config must be an object", str(path))
    unknown = set(data) - {"cutoff", "guard", "T", "steps", "rho0", "slack", "seed"}
    if unknown:
        raise InputError(f"unknown keys {sorted(unknown)}", str(path))
    cfg = SimConfig(**data)
    rho0 = cfg.rho0
    if not isinstance(rho0, dict) or rho0.get("kind") not in ("fock", "coherent", "thermal", "random"):
        raise InputError("rho0.kind must be fock, coherent, thermal or random", f"{path}:$.rho0")
    return cfg
