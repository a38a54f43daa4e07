"""Robust mean square stability certificates for perturbed linear quantum systems."""

from .bounded_real import (
    check_qmi,
    frequency_sweep,
    hinf_norm,
    qmi_matrix,
    quantum_symmetrize,
    solve_sbr_riccati,
    spectral_abscissa,
)
from .certifier import (
    StabilityCertificate,
    certify,
    compute_c,
    compute_lambda_tilde,
    compute_mu,
    verify_certificate,
)
from .estimator import RobustStabilityCertifier
from .exceptions import (
    InfeasibleError,
    InputError,
    IntegrationError,
    ModelValidationError,
    NotHurwitzError,
    QLSError,
    RiccatiError,
    TruncationError,
)
from .model import (
    PerturbationSpec,
    QuantumLinearModel,
    assemble_doubled,
    build_barB,
    build_barC,
    build_F,
    check_model,
    validate_model,
)
from .scaling import ScalingTriple, search

__version__ = "0.1.0"

__all__ = [
    "PerturbationSpec",
    "QuantumLinearModel",
    "ScalingTriple",
    "StabilityCertificate",
    "RobustStabilityCertifier",
    "assemble_doubled",
    "build_F",
    "build_barB",
    "build_barC",
    "check_model",
    "validate_model",
    "spectral_abscissa",
    "hinf_norm",
    "frequency_sweep",
    "solve_sbr_riccati",
    "quantum_symmetrize",
    "qmi_matrix",
    "check_qmi",
    "search",
    "certify",
    "verify_certificate",
    "compute_mu",
    "compute_lambda_tilde",
    "compute_c",
    "QLSError",
    "ModelValidationError",
    "NotHurwitzError",
    "RiccatiError",
    "InfeasibleError",
    "InputError",
    "TruncationError",
    "IntegrationError",
]
