"""Nominal linear quantum system, perturbation class and doubled-up matrices.

Operators are stacked as ``x = [a; a#]`` where ``a`` holds the ``n``
annihilation operators and ``a#`` the matching creation operators. Every
``2n x 2n`` matrix in this package acts on that stacking.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    as_complex_matrix,
    check_positive,
    relative_asymmetry,
)
from .exceptions import ModelValidationError

__all__ = [
    "QuantumLinearModel",
    "PerturbationSpec",
    "DoubledMatrices",
    "ValidationReport",
    "signature_matrix",
    "swap_matrix",
    "validate_model",
    "validate_perturbation",
    "check_model",
    "assemble_doubled",
    "build_F",
    "build_barC",
    "build_barB",
]

TOL_SYM = 1e-10


def signature_matrix(n):
    """``J = diag(I_n, -I_n)``."""
    return np.diag(np.r_[np.ones(n), -np.ones(n)]).astype(complex)


def swap_matrix(n):
    """``Sigma = [[0, I], [I, 0]]``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [eye, zero]]).astype(complex)


def doubled(A1, A2):
    """``[[A1, A2], [A2#, A1#]]``."""
    return np.block([[A1, A2], [A2.conj(), A1.conj()]])


@dataclass(frozen=True, eq=False)
class QuantumLinearModel:
    """Nominal system ``H = 1/2 x^dag M x`` and ``L1 = [N1 N2] x``.

    ``E1``/``E2`` define the scalar operator ``zeta = E1 a + E2 a#`` through
    which the coupling perturbation enters.
    """

    M1: np.ndarray
    M2: np.ndarray
    N1: np.ndarray
    N2: np.ndarray
    E1: np.ndarray
    E2: np.ndarray

    @classmethod
    def from_blocks(cls, M1, M2, N1, N2, E1, E2):
        return cls(
            M1=as_complex_matrix(M1, "M1"),
            M2=as_complex_matrix(M2, "M2"),
            N1=as_complex_matrix(N1, "N1"),
            N2=as_complex_matrix(N2, "N2"),
            E1=as_complex_matrix(E1, "E1"),
            E2=as_complex_matrix(E2, "E2"),
        )

    @property
    def n(self):
        return self.M1.shape[0]

    def blocks(self):
        return {k: getattr(self, k) for k in ("M1", "M2", "N1", "N2", "E1", "E2")}

    def symmetrized(self):
        """Copy with ``M1`` made exactly Hermitian and ``M2`` exactly symmetric."""
        return QuantumLinearModel(
            M1=0.5 * (self.M1 + self.M1.conj().T),
            M2=0.5 * (self.M2 + self.M2.T),
            N1=self.N1,
            N2=self.N2,
            E1=self.E1,
            E2=self.E2,
        )


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """Sector parameters of the perturbation class.

    Parameters
    ----------
    gamma : float
        Gain bound, ``f(zeta)^* f(zeta) <= zeta^* zeta / gamma**2 + delta1``.
    delta1, delta2, delta3 : float
        Offsets bounding ``f``, ``f'`` and ``f''`` respectively.
    poly : sequence of complex, optional
        Coefficients ``S_0 .. S_K`` of a concrete ``f(zeta) = sum S_k zeta**k``.
        Only the Fock-space oracle uses them.
    """

    gamma: float
    delta1: float = 0.0
    delta2: float = 0.0
    delta3: float = 0.0
    poly: tuple = field(default=None)

    def __post_init__(self):
        if self.poly is not None:
            object.__setattr__(
                self, "poly", tuple(complex(c) for c in np.ravel(self.poly))
            )

    @property
    def degree(self):
        return None if self.poly is None else len(self.poly) - 1

    def derivative_coeffs(self, order=1):
        """Coefficients of the ``order``-th derivative of ``f``."""
        coeffs = np.asarray(self.poly if self.poly is not None else [], complex)
        for _ in range(order):
            coeffs = coeffs[1:] * np.arange(1, len(coeffs))
        return coeffs

    def with_(self, **changes):
        data = dict(
            gamma=self.gamma,
            delta1=self.delta1,
            delta2=self.delta2,
            delta3=self.delta3,
            poly=self.poly,
        )
        data.update(changes)
        return PerturbationSpec(**data)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {"valid": self.ok, "violations": list(self.violations)}


@dataclass(frozen=True, eq=False)
class DoubledMatrices:
    M: np.ndarray
    Ntilde: np.ndarray
    N: np.ndarray
    Etilde: np.ndarray


def validate_model(model, tol_sym=TOL_SYM):
    """List every structural violation of ``model``; an empty list means valid."""
    report = ValidationReport()
    v = report.violations
    blocks = model.blocks()
    for name, block in blocks.items():
        if np.asarray(block).ndim != 2:
            v.append(f"{name} must be a 2-D matrix")
            return report
        if not np.all(np.isfinite(block)):
            v.append(f"{name} has non-finite entries")
    n = model.M1.shape[0]
    if n < 1:
        v.append("mode count n must be at least 1")
    expected = {
        "M1": (n, n),
        "M2": (n, n),
        "N1": (1, n),
        "N2": (1, n),
        "E1": (1, n),
        "E2": (1, n),
    }
    shapes_ok = True
    for name, shape in expected.items():
        got = blocks[name].shape
        if got != shape:
            shapes_ok = False
            if name in ("E1", "E2") and got[0] != 1 and got[1:] == shape[1:]:
                v.append(f"{name} has {got[0]} rows; only a scalar zeta channel is supported")
            elif name in ("N1", "N2") and got[0] != 1 and got[1:] == shape[1:]:
                v.append(f"{name} has {got[0]} rows; only a single nominal coupling is supported")
            else:
                v.append(f"{name} has shape {got}, expected {shape}")
    if not shapes_ok or v:
        return report
    if relative_asymmetry(model.M1, model.M1.conj().T) > tol_sym:
        v.append("M1 not Hermitian")
    if relative_asymmetry(model.M2, model.M2.T) > tol_sym:
        v.append("M2 not symmetric")
    return report


def validate_perturbation(pert):
    report = ValidationReport()
    v = report.violations
    if not np.isfinite(pert.gamma) or pert.gamma <= 0:
        v.append(f"gamma must be > 0, got {pert.gamma}")
    for name in ("delta1", "delta2", "delta3"):
        value = getattr(pert, name)
        if not np.isfinite(value) or value < 0:
            v.append(f"{name} must be >= 0, got {value}")
    if pert.poly is not None:
        if len(pert.poly) == 0:
            v.append("poly must contain at least one coefficient")
        elif not np.all(np.isfinite(np.asarray(pert.poly, complex))):
            v.append("poly has non-finite coefficients")
    return report


def check_model(model, pert=None, tol_sym=TOL_SYM):
    """Validate and return the symmetrized model, raising on any violation."""
    violations = list(validate_model(model, tol_sym).violations)
    if pert is not None:
        violations += validate_perturbation(pert).violations
    if violations:
        raise ModelValidationError(violations)
    return model.symmetrized()


def assemble_doubled(model):
    model = check_model(model)
    return DoubledMatrices(
        M=doubled(model.M1, model.M2),
        Ntilde=np.hstack([model.N1, model.N2]),
        N=doubled(model.N1, model.N2),
        Etilde=np.hstack([model.E1, model.E2]),
    )


def build_F(model):
    """``F = -i J M - 1/2 J N^dag J N``.

    The inner ``J`` acts on the doubled coupling channel and is 2 x 2.
    """
    dm = assemble_doubled(model)
    J = signature_matrix(model.n)
    Jc = signature_matrix(dm.N.shape[0] // 2)
    return -1j * J @ dm.M - 0.5 * J @ dm.N.conj().T @ Jc @ dm.N


def _scalings(tau1, tau3, tau4):
    return (
        check_positive(tau1, "tau1"),
        check_positive(tau3, "tau3"),
        check_positive(tau4, "tau4"),
    )


def build_barC(model, tau1, tau3, tau4, pert):
    """Output matrix ``[sqrt(tau3^2 + tau4^2)/gamma * E~ ; tau1 * N~]`` (2 x 2n)."""
    tau1, tau3, tau4 = _scalings(tau1, tau3, tau4)
    dm = assemble_doubled(model)
    top = np.sqrt(tau3**2 + tau4**2) / pert.gamma * dm.Etilde
    return np.vstack([top, tau1 * dm.Ntilde])


def build_barB(model, tau1, tau3, tau4, pert):
    """Input matrix ``[sqrt(d2 (1/tau1^2 + 1/tau4^2)) J E~^dag , J N~^dag / tau3]``."""
    tau1, tau3, tau4 = _scalings(tau1, tau3, tau4)
    dm = assemble_doubled(model)
    J = signature_matrix(model.n)
    gain = np.sqrt(pert.delta2 * (1.0 / tau1**2 + 1.0 / tau4**2))
    return np.hstack([gain * J @ dm.Etilde.conj().T, J @ dm.Ntilde.conj().T / tau3])
