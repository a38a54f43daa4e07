"""Search for scalings ``(tau1, tau3, tau4)`` satisfying the scaled bounded real test.

Every scaling enters the test through its square, so the search runs over
``log10(tau**2)``. A coarse grid seeds a coordinate descent that refines one
coordinate at a time by golden-section search, in the fixed order
``tau3, tau1, tau4``.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive
from .bounded_real import hinf_norm, spectral_abscissa
from .exceptions import NotHurwitzError
from .model import build_barB, build_barC, build_F

__all__ = ["ScalingTriple", "SearchOutcome", "evaluate", "search", "golden_section"]

logger = logging.getLogger(__name__)

SWEEP_ORDER = ("tau3", "tau1", "tau4")
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ScalingTriple:
    tau1: float
    tau3: float
    tau4: float

    def __post_init__(self):
        for name in ("tau1", "tau3", "tau4"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))

    @classmethod
    def from_log_squares(cls, s1, s3, s4):
        return cls(10 ** (s1 / 2), 10 ** (s3 / 2), 10 ** (s4 / 2))

    def log_squares(self):
        return {k: 2 * math.log10(getattr(self, k)) for k in ("tau1", "tau3", "tau4")}

    def as_tuple(self):
        return (self.tau1, self.tau3, self.tau4)


@dataclass
class SearchOutcome:
    best: ScalingTriple
    best_norm: float
    feasible: bool
    evaluations: int
    trace: list = field(default_factory=list)
    reason: str = ""


def evaluate(model, pert, triple, F=None, n_grid=64):
    """H-infinity norm of the scaled system for one scaling triple.

    ``F`` does not depend on the scalings; callers that evaluate many triples
    pass it in precomputed.
    """
    if F is None:
        F = build_F(model)
    alpha = spectral_abscissa(F)
    if alpha >= 0:
        raise NotHurwitzError(alpha, "Hurwitz condition failed")
    B = build_barB(model, *triple.as_tuple(), pert)
    C = build_barC(model, *triple.as_tuple(), pert)
    return hinf_norm(F, B, C, n_grid=n_grid, cross_check=False).norm


def golden_section(fun, lo, hi, tol=1e-6, max_iter=200):
    """Minimise a unimodal ``fun`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def search(
    model,
    pert,
    grid_decades=5.0,
    points_per_decade=3,
    refine_iters=6,
    margin=1e-3,
    line_tol=1e-6,
):
    """Find scalings minimising the scaled H-infinity norm.

    Parameters
    ----------
    grid_decades : float
        Width of the seeding grid in decades of ``tau**2``, centred at 1.
    points_per_decade : int
        Grid density per axis.
    refine_iters : int
        Number of coordinate-descent sweeps.
    margin : float
        The outcome is feasible iff ``best_norm < 1 - margin``.

    Returns
    -------
    SearchOutcome
        A failed search means "not found in the searched region"; it is not
        evidence of instability.
    """
    F = build_F(model)
    if spectral_abscissa(F) >= 0:
        return SearchOutcome(
            best=ScalingTriple(1.0, 1.0, 1.0),
            best_norm=math.inf,
            feasible=False,
            evaluations=0,
            reason="Hurwitz condition failed",
        )

    evaluations = 0

    def objective(logs):
        nonlocal evaluations
        evaluations += 1
        return evaluate(model, pert, ScalingTriple.from_log_squares(*logs), F=F)

    n_pts = int(round(grid_decades * points_per_decade)) + 1
    axis = np.linspace(-grid_decades / 2, grid_decades / 2, n_pts)
    best_logs, best_norm = None, math.inf
    for point in itertools.product(axis, repeat=3):
        value = objective(point)
        # ties go to the lexicographically smallest triple
        if value < best_norm:
            best_logs, best_norm = tuple(float(p) for p in point), value
    trace = [(ScalingTriple.from_log_squares(*best_logs), best_norm)]
    logger.debug("grid seed %s -> %.6g", best_logs, best_norm)

    index = {"tau1": 0, "tau3": 1, "tau4": 2}
    half_width = max(1.0, 1.0 / points_per_decade)
    for sweep in range(refine_iters):
        for name in SWEEP_ORDER:
            i = index[name]
            base = list(best_logs)

            def line(s, base=base, i=i):
                trial = list(base)
                trial[i] = s
                return objective(trial)

            s_new, f_new = golden_section(
                line, base[i] - half_width, base[i] + half_width, tol=line_tol
            )
            if f_new < best_norm:
                base[i] = s_new
                best_logs, best_norm = tuple(base), f_new
            trace.append((ScalingTriple.from_log_squares(*best_logs), best_norm))
        logger.debug("sweep %d -> %.6g", sweep, best_norm)

    feasible = best_norm < 1.0 - margin
    return SearchOutcome(
        best=ScalingTriple.from_log_squares(*best_logs),
        best_norm=best_norm,
        feasible=feasible,
        evaluations=evaluations,
        trace=trace,
        reason="" if feasible else "no feasible scalings found",
    )
