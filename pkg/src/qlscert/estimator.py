"""Estimator-style front end to the certifier."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .certifier import certify, verify_certificate
from .exceptions import InfeasibleError
from .model import check_model

__all__ = ["RobustStabilityCertifier"]


class RobustStabilityCertifier(BaseEstimator):
    """Fit a robust mean square stability certificate to a model.

    Parameters
    ----------
    grid_decades, points_per_decade, refine_iters, margin
        Scaling search options.
    decay_fraction : float
        Fraction of the largest admissible decay margin built into ``P``.
    eps : float or None
        Riccati strictness offset; ``None`` picks a default from the data.
    tau_policy : {"default", "optimize-c3"}
        How ``tau2`` and ``tau5`` are chosen.

    Attributes
    ----------
    certificate_ : StabilityCertificate or None
    feasible_ : bool
    reason_ : str
        Empty when feasible, otherwise the stable infeasibility reason.
    model_, pert_
        The validated inputs the estimator was fitted on.

    Examples
    --------
    >>> est = RobustStabilityCertifier().fit(model, pert)  # doctest: +SKIP
    >>> est.predict_bound([0.0, 1.0], initial_number=3.0)  # doctest: +SKIP
    """

    def __init__(
        self,
        grid_decades=5.0,
        points_per_decade=3,
        refine_iters=6,
        margin=1e-3,
        decay_fraction=0.5,
        eps=None,
        tau_policy="default",
    ):
        self.grid_decades = grid_decades
        self.points_per_decade = points_per_decade
        self.refine_iters = refine_iters
        self.margin = margin
        self.decay_fraction = decay_fraction
        self.eps = eps
        self.tau_policy = tau_policy

    def fit(self, model, pert, scalings=None):
        """Run the certification pipeline; infeasibility is recorded, not raised."""
        self.model_ = check_model(model, pert)
        self.pert_ = pert
        try:
            self.certificate_ = certify(
                self.model_,
                pert,
                scalings=scalings,
                grid_decades=self.grid_decades,
                points_per_decade=self.points_per_decade,
                refine_iters=self.refine_iters,
                margin=self.margin,
                decay_fraction=self.decay_fraction,
                eps=self.eps,
                tau_policy=self.tau_policy,
            )
            self.feasible_ = True
            self.reason_ = ""
            self.diagnostics_ = self.certificate_.diagnostics
        except InfeasibleError as exc:
            self.certificate_ = None
            self.feasible_ = False
            self.reason_ = exc.reason
            self.diagnostics_ = exc.diagnostics
        return self

    def _certificate(self):
        check_is_fitted(self, "certificate_")
        if self.certificate_ is None:
            raise InfeasibleError(self.reason_, "no certificate was produced")
        return self.certificate_

    def predict_bound(self, t, initial_number):
        """Certified upper bound on ``<x^dag x>(t)``."""
        return self._certificate().number_bound(np.asarray(t, float), initial_number)

    def decay_rate(self):
        return self._certificate().c2

    def verify(self):
        """Re-verify the fitted certificate; returns a :class:`CheckReport`."""
        return verify_certificate(self.model_, self.pert_, self._certificate())
