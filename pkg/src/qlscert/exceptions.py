"""Exception hierarchy for qlscert."""


class QLSError(Exception):
    """Base class for all errors raised by the package."""


class ModelValidationError(QLSError, ValueError):
    """Raised when a model or perturbation violates a structural constraint."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid model")


class NotHurwitzError(QLSError):
    """Raised when a state matrix that must be Hurwitz is not."""

    def __init__(self, abscissa, message=None):
        self.abscissa = float(abscissa)
        super().__init__(
            message or f"matrix is not Hurwitz (spectral abscissa {abscissa:.3e})"
        )


class RiccatiError(QLSError):
    """Raised when no stabilizing Riccati solution exists."""

    def __init__(self, message, norm=None):
        self.norm = norm
        if norm is not None:
            message = f"{message} (achieved H-infinity norm {norm:.6g})"
        super().__init__(message)


class InfeasibleError(QLSError):
    """Raised when a certificate cannot be produced.

    ``reason`` is one of the stable strings ``"non-Hurwitz"``,
    ``"no feasible scalings found"`` or ``"Riccati failure"``.
    """

    def __init__(self, reason, detail="", diagnostics=None):
        self.reason = reason
        self.detail = detail
        self.diagnostics = dict(diagnostics or {})
        super().__init__(f"{reason}: {detail}" if detail else reason)


class TruncationError(QLSError):
    """Raised when a Fock-space representation would exceed its size cap."""


class IntegrationError(QLSError):
    """Raised when the master-equation integrator loses trace or accuracy."""


class InputError(QLSError, ValueError):
    """Raised when an input file cannot be parsed or has the wrong layout.

    ``location`` describes where the problem is (file, line or JSON path).
    """

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
