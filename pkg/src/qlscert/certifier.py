"""Robust mean square stability certificates.

The pipeline is::

    build_F -> Hurwitz check -> scaling search -> Riccati solve
    -> quantum symmetrization -> choose tau2, tau5 -> decay rate c
    -> mu, lambda_tilde -> lambda and the constants (c1, c2, c3)

A certificate guarantees, for every admissible perturbation,

    <x(t)^dag x(t)> <= c1 exp(-c2 t) <x^dag x> + c3,

with ``x = [a; a#]``.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .bounded_real import (
    check_qmi,
    hinf_norm,
    quantum_symmetrize,
    solve_sbr_riccati,
    spectral_abscissa,
    structure_deviation,
)
from .exceptions import InfeasibleError, NotHurwitzError, RiccatiError
from .model import (
    assemble_doubled,
    build_barB,
    build_barC,
    build_F,
    check_model,
    signature_matrix,
    swap_matrix,
)
from .scaling import ScalingTriple, golden_section, search

__all__ = [
    "StabilityCertificate",
    "CheckReport",
    "compute_mu",
    "halved_mu",
    "compute_lambda_tilde",
    "select_tau25",
    "compute_c",
    "offset_lambda",
    "certify",
    "verify_certificate",
    "REASON_NON_HURWITZ",
    "REASON_NO_SCALINGS",
    "REASON_RICCATI",
]

logger = logging.getLogger(__name__)

REASON_NON_HURWITZ = "non-Hurwitz"
REASON_NO_SCALINGS = "no feasible scalings found"
REASON_RICCATI = "Riccati failure"

TOL_NEG = 1e-12


@dataclass
class StabilityCertificate:
    tau: tuple
    P: np.ndarray
    mu: complex
    lambda_tilde: float
    lam: float
    c: float
    c1: float
    c2: float
    c3: float
    qmi_lambda_max: float
    hinf: float
    diagnostics: dict = field(default_factory=dict)

    def number_bound(self, t, initial_number):
        """Right-hand side of the mean square bound on ``<x^dag x>(t)``."""
        t = np.asarray(t, float)
        return self.c1 * np.exp(-self.c2 * t) * initial_number + self.c3

    def lyapunov_bound(self, t, initial_value):
        """Right-hand side of ``<V(t)> <= exp(-c t) <V> + lambda / c``."""
        t = np.asarray(t, float)
        return np.exp(-self.c * t) * initial_value + self.lam / self.c


@dataclass
class CheckReport:
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(ok for ok, _ in self.checks.values())

    def add(self, name, ok, detail=""):
        self.checks[name] = (bool(ok), detail)

    def failures(self):
        return [name for name, (ok, _) in self.checks.items() if not ok]

    def to_dict(self):
        return {
            "ok": self.ok,
            "checks": {k: {"ok": ok, "detail": d} for k, (ok, d) in self.checks.items()},
        }


def compute_mu(model, P):
    """The constant ``mu = -1/2 [zeta, [V, zeta]]`` for ``V = x^dag P x``.

    With ``[x, x^T] = J Sigma`` and ``[V, x] = -2 J P x`` this evaluates to
    ``E~ J Sigma P^T J E~^T``.
    """
    E = assemble_doubled(model).Etilde
    if E.shape != (1, 2 * model.n):
        raise ValueError(f"E~ must be 1 x {2 * model.n}, got {E.shape}")
    J = signature_matrix(model.n)
    S = swap_matrix(model.n)
    P = np.asarray(P, complex)
    return complex((E @ J @ S @ P.T @ J @ E.T)[0, 0])


def halved_mu(model, P):
    """The alternative closed form ``-1/2 E~ Sigma J P J E~^T``.

    Equal to ``compute_mu(model, P.T) / 2``, so it is half the commutator
    value for real ``P`` and differs by conjugation of ``P`` otherwise. Kept
    for comparison only; :func:`compute_mu` is the value the certificate uses.
    """
    E = assemble_doubled(model).Etilde
    J = signature_matrix(model.n)
    S = swap_matrix(model.n)
    return complex((-0.5 * E @ S @ J @ np.asarray(P, complex) @ J @ E.T)[0, 0])


def compute_lambda_tilde(model, P, tol=1e-10):
    """``tr(P J N^dag [[I, 0], [0, 0]] N J)``, clamped at zero within ``tol``."""
    n = model.n
    N = assemble_doubled(model).N
    J = signature_matrix(n)
    k = N.shape[0] // 2
    upper = np.diag(np.r_[np.ones(k), np.zeros(k)])
    value = np.trace(np.asarray(P, complex) @ J @ N.conj().T @ upper @ N @ J).real
    if value < 0:
        scale = max(1.0, np.linalg.norm(P) * np.linalg.norm(N) ** 2)
        if value < -tol * scale:
            raise ValueError(f"lambda_tilde = {value} is negative; P is not PSD")
        warnings.warn(f"lambda_tilde = {value:.3e} clamped to 0", RuntimeWarning)
        value = 0.0
    return float(value)


def compute_c(W, P):
    """Largest ``c`` with ``W + c P <= 0``: the smallest eigenvalue of the pencil ``(-W, P)``."""
    W = np.asarray(W, complex)
    P = np.asarray(P, complex)
    if np.linalg.eigvalsh(W).max() >= 0:
        raise ValueError("W must be negative definite")
    if np.linalg.eigvalsh(P).min() <= 0:
        raise ValueError("P must be positive definite")
    return float(sla.eigh(-W, P, eigvals_only=True).min())


def offset_lambda(pert, taus, mu, lambda_tilde):
    """``lambda~ + (d3/2tau2^2 + d3/2tau5^2)|mu|^2 + (tau3^2 + tau4^2 + tau5^2) d1 / 2``."""
    tau1, tau2, tau3, tau4, tau5 = taus
    mu2 = abs(mu) ** 2
    return (
        lambda_tilde
        + (pert.delta3 / (2 * tau2**2) + pert.delta3 / (2 * tau5**2)) * mu2
        + (tau3**2 + tau4**2 + tau5**2) / 2 * pert.delta1
    )


def _constants(model, pert, P, taus, W_full):
    mu = compute_mu(model, P)
    lambda_tilde = compute_lambda_tilde(model, P)
    lam = offset_lambda(pert, taus, mu, lambda_tilde)
    c = compute_c(W_full, P)
    eig = np.linalg.eigvalsh(P)
    return dict(
        mu=mu,
        lambda_tilde=lambda_tilde,
        lam=lam,
        c=c,
        c1=float(eig.max() / eig.min()),
        c2=c,
        c3=float(lam / (c * eig.min())),
    )


def select_tau25(model, pert, P, scalings, policy="default"):
    """Choose ``tau2``, ``tau5`` small enough that the inequality stays strict.

    With ``eta = -lambda_max`` of the base inequality (``tau2 = tau5 = 0``),
    the default policy sizes each added term to spectral norm ``eta / 4``:
    ``tau2^2 = eta / (2 ||N~^dag N~||)`` and
    ``tau5^2 = eta gamma^2 / (2 ||E~^dag E~||)``. The full inequality then has
    ``lambda_max <= -eta / 2``. A term that vanishes identically gets ``tau = 1``.

    ``policy="optimize-c3"`` starts from the default and runs a coordinate
    golden-section search over ``(log tau2^2, log tau5^2)`` minimising ``c3``.
    """
    tau1, tau3, tau4 = ScalingTriple(*scalings).as_tuple()
    base = check_qmi(P, model, (tau1, 0.0, tau3, tau4, 0.0), pert)
    eta = -base.lambda_max
    if eta <= 0:
        raise ValueError("base QMI infeasible")
    dm = assemble_doubled(model)
    nn = np.linalg.norm(dm.Ntilde.conj().T @ dm.Ntilde, 2)
    ee = np.linalg.norm(dm.Etilde.conj().T @ dm.Etilde, 2)
    tau2_sq = eta / (2 * nn) if nn > 0 else 1.0
    tau5_sq = eta * pert.gamma**2 / (2 * ee) if ee > 0 else 1.0
    if policy == "default":
        return math.sqrt(tau2_sq), math.sqrt(tau5_sq)
    if policy != "optimize-c3":
        raise ValueError(f"unknown tau policy {policy!r}")

    def c3_of(log2, log5):
        taus = (tau1, 10 ** (log2 / 2), tau3, tau4, 10 ** (log5 / 2))
        qmi = check_qmi(P, model, taus, pert)
        if qmi.lambda_max >= -TOL_NEG:
            return math.inf
        return _constants(model, pert, P, taus, qmi.W)["c3"]

    x = [math.log10(tau2_sq), math.log10(tau5_sq)]
    best = c3_of(*x)
    for _ in range(3):
        for i in range(2):
            def line(s, i=i):
                trial = list(x)
                trial[i] = s
                return c3_of(*trial)

            s, value = golden_section(line, x[i] - 6.0, x[i] + 1.0, tol=1e-4)
            if value < best:
                x[i], best = s, value
    return 10 ** (x[0] / 2), 10 ** (x[1] / 2)


def _max_decay_shift(F, B, C, margin, iters=40):
    """Largest ``alpha`` with ``||C (sI - F - alpha I)^{-1} B||_inf <= 1 - margin``.

    The shifted norm is the supremum over ``Re s >= -alpha`` and so grows
    monotonically with ``alpha``; plain bisection applies.
    """
    limit = 1.0 - margin
    if hinf_norm(F, B, C, n_grid=256, cross_check=False).norm >= limit:
        return None
    lo, hi = 0.0, -spectral_abscissa(F)
    eye = np.eye(F.shape[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        try:
            value = hinf_norm(F + mid * eye, B, C, n_grid=256, cross_check=False).norm
        except NotHurwitzError:
            value = math.inf
        if value < limit:
            lo = mid
        else:
            hi = mid
    return lo


def _structured_P(model, pert, F, triple, margin, decay_fraction, eps):
    """Positive definite ``P`` in doubled-up form satisfying the base inequality.

    Two routes are tried in order. ``raw`` solves the Riccati equation for the
    scaled system and symmetrizes. ``dominated`` replaces ``2 B B^dag`` and
    ``C^dag C / 2`` by their sums with their ``Sigma (.)# Sigma`` images; that
    data is invariant under the involution, so the stabilizing solution is
    already in doubled-up form, and it over-bounds the original inequality.
    Each route shifts ``F`` by ``decay_fraction`` of the largest admissible
    decay margin so the inequality holds with ``-2 alpha P`` to spare.
    """
    B = build_barB(model, *triple.as_tuple(), pert)
    C = build_barC(model, *triple.as_tuple(), pert)
    S = swap_matrix(model.n)
    routes = [
        ("raw", B, C),
        ("dominated", np.hstack([B, S @ B.conj()]), np.vstack([C, C.conj() @ S])),
    ]
    taus0 = (triple.tau1, 0.0, triple.tau3, triple.tau4, 0.0)
    attempts = []
    eye = np.eye(F.shape[0])
    for route, Bk, Ck in routes:
        alpha_max = _max_decay_shift(F, Bk, Ck, margin)
        if alpha_max is None:
            attempts.append({"route": route, "status": "norm >= 1 - margin"})
            continue
        alpha = decay_fraction * alpha_max
        try:
            sol = solve_sbr_riccati(F + alpha * eye, Bk, Ck, eps=eps)
        except RiccatiError as exc:
            attempts.append({"route": route, "status": str(exc)})
            continue
        P = quantum_symmetrize(sol.P)
        base = check_qmi(P, model, taus0, pert)
        ok = base.lambda_max < -TOL_NEG and np.linalg.eigvalsh(P).min() > 0
        attempts.append(
            {
                "route": route,
                "status": "ok" if ok else "symmetrized P violates the inequality",
                "alpha": alpha,
                "alpha_max": alpha_max,
                "residual": sol.residual,
                "closed_loop_abscissa": sol.closed_loop_abscissa,
                "eps": sol.eps,
                "raw_structure_deviation": structure_deviation(sol.P),
                "base_qmi_lambda_max": base.lambda_max,
            }
        )
        if ok:
            return P, attempts
    raise InfeasibleError(
        REASON_RICCATI,
        "no doubled-up Riccati solution satisfies the inequality",
        {"riccati_attempts": attempts},
    )


def certify(
    model,
    pert,
    scalings=None,
    grid_decades=5.0,
    points_per_decade=3,
    refine_iters=6,
    margin=1e-3,
    decay_fraction=0.5,
    eps=None,
    tau_policy="default",
):
    """Certify robust mean square stability or raise :class:`InfeasibleError`.

    Parameters
    ----------
    scalings : tuple of float, optional
        Pinned ``(tau1, tau3, tau4)``; skips the search when given.
    grid_decades, points_per_decade, refine_iters, margin
        Search options, see :func:`qlscert.scaling.search`.
    decay_fraction : float in (0, 1]
        Fraction of the largest admissible decay margin built into ``P``.
    eps : float, optional
        Strictness offset for the Riccati equation.
    tau_policy : {"default", "optimize-c3"}
    """
    model = check_model(model, pert)
    if not 0 < decay_fraction <= 1:
        raise ValueError("decay_fraction must lie in (0, 1]")
    F = build_F(model)
    abscissa = spectral_abscissa(F)
    if abscissa >= 0:
        raise InfeasibleError(
            REASON_NON_HURWITZ,
            f"F has spectral abscissa {abscissa:.3e}",
            {"spectral_abscissa": abscissa},
        )

    diagnostics = {"spectral_abscissa_F": abscissa}
    if scalings is None:
        outcome = search(
            model,
            pert,
            grid_decades=grid_decades,
            points_per_decade=points_per_decade,
            refine_iters=refine_iters,
            margin=margin,
        )
        diagnostics["search_evaluations"] = outcome.evaluations
        diagnostics["search_norm"] = outcome.best_norm
        if not outcome.feasible:
            raise InfeasibleError(
                REASON_NO_SCALINGS,
                f"best scaled norm {outcome.best_norm:.6g} >= 1 - margin in the "
                "searched region (not a proof of instability)",
                diagnostics,
            )
        triple = outcome.best
    else:
        triple = ScalingTriple(*scalings)

    B = build_barB(model, *triple.as_tuple(), pert)
    C = build_barC(model, *triple.as_tuple(), pert)
    hinf = hinf_norm(F, B, C).norm
    diagnostics["hinf"] = hinf
    if hinf >= 1.0 - margin:
        raise InfeasibleError(
            REASON_NO_SCALINGS, f"scaled norm {hinf:.6g} >= 1 - margin", diagnostics
        )

    try:
        P, attempts = _structured_P(model, pert, F, triple, margin, decay_fraction, eps)
    except InfeasibleError as exc:
        exc.diagnostics.update(diagnostics)
        raise
    diagnostics["riccati_attempts"] = attempts
    diagnostics["riccati_route"] = attempts[-1]["route"]

    base = check_qmi(P, model, (triple.tau1, 0.0, triple.tau3, triple.tau4, 0.0), pert)
    diagnostics["eta"] = -base.lambda_max
    tau2, tau5 = select_tau25(model, pert, P, triple.as_tuple(), policy=tau_policy)
    taus = (triple.tau1, tau2, triple.tau3, triple.tau4, tau5)
    qmi = check_qmi(P, model, taus, pert)
    consts = _constants(model, pert, P, taus, qmi.W)
    diagnostics["structure_deviation"] = structure_deviation(P)
    diagnostics["warnings"] = []
    if consts["c3"] > 1e6:
        diagnostics["warnings"].append("c3 is very large; inequality margin is thin")

    cert = StabilityCertificate(
        tau=tuple(float(t) for t in taus),
        P=P,
        mu=consts["mu"],
        lambda_tilde=consts["lambda_tilde"],
        lam=consts["lam"],
        c=consts["c"],
        c1=consts["c1"],
        c2=consts["c2"],
        c3=consts["c3"],
        qmi_lambda_max=qmi.lambda_max,
        hinf=hinf,
        diagnostics=diagnostics,
    )
    report = verify_certificate(model, pert, cert)
    if not report.ok:
        raise InfeasibleError(
            REASON_RICCATI,
            "emitted certificate failed re-verification: " + ", ".join(report.failures()),
            dict(diagnostics, check=report.to_dict()),
        )
    return cert


def verify_certificate(model, pert, cert, rtol=1e-8, tol_neg=1e-9):
    """Re-verify a certificate from the raw inputs without rerunning the search.

    The stated constants must be at least as conservative as the ones the
    certificate's ``P`` and ``tau`` support: ``c2`` no larger than the
    generalized eigenvalue bound, ``c1`` and ``c3`` no smaller than their
    recomputed values.

    Raises
    ------
    ValueError
        If the certificate's dimensions do not match the model.
    """
    model = check_model(model, pert)
    report = CheckReport()
    P = np.asarray(cert.P, complex)
    m = 2 * model.n
    if P.shape != (m, m) or len(cert.tau) != 5:
        raise ValueError(f"certificate P has shape {P.shape}, model needs {(m, m)}")

    def close(a, b):
        return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))

    herm = np.linalg.norm(P - P.conj().T) <= 1e-12 * max(1.0, np.linalg.norm(P))
    report.add("P_hermitian", herm)
    P = 0.5 * (P + P.conj().T)
    eig = np.linalg.eigvalsh(P)
    report.add("P_positive_definite", eig.min() > 0, f"lambda_min(P) = {eig.min():.6g}")
    dev = structure_deviation(P)
    report.add("P_doubled_up_form", dev <= 1e-9, f"deviation {dev:.3e}")
    taus = tuple(float(t) for t in cert.tau)
    report.add("tau_positive", all(t > 0 and math.isfinite(t) for t in taus))
    if not report.ok:
        return report

    F = build_F(model)
    abscissa = spectral_abscissa(F)
    report.add("F_hurwitz", abscissa < 0, f"abscissa {abscissa:.6g}")
    if abscissa >= 0:
        return report
    tau1, _, tau3, tau4, _ = taus
    B = build_barB(model, tau1, tau3, tau4, pert)
    C = build_barC(model, tau1, tau3, tau4, pert)
    hinf = hinf_norm(F, B, C, n_grid=2048).norm
    report.add("hinf_below_one", hinf < 1.0, f"recomputed {hinf:.10g}")
    report.add("hinf_matches", close(hinf, cert.hinf), f"stated {cert.hinf:.10g}")

    qmi = check_qmi(P, model, taus, pert)
    report.add("qmi_negative", qmi.lambda_max < 0, f"lambda_max {qmi.lambda_max:.6g}")
    report.add("qmi_matches", close(qmi.lambda_max, cert.qmi_lambda_max))
    if qmi.lambda_max >= 0:
        return report

    c_max = compute_c(qmi.W, P)
    report.add("c_equals_c2", close(cert.c, cert.c2), f"c={cert.c}, c2={cert.c2}")
    report.add(
        "c2_supported",
        0 < cert.c2 <= c_max * (1 + rtol),
        f"stated c2 {cert.c2:.10g}, supported {c_max:.10g}",
    )
    scale = max(1.0, np.linalg.norm(qmi.W, 2))
    decay = np.linalg.eigvalsh(qmi.W + cert.c2 * P).max()
    report.add("decay_inequality", decay <= tol_neg * scale, f"lambda_max(W + c2 P) = {decay:.3e}")

    mu = compute_mu(model, P)
    lt = compute_lambda_tilde(model, P)
    lam = offset_lambda(pert, taus, mu, lt)
    report.add("mu_matches", abs(mu - complex(cert.mu)) <= rtol * max(1.0, abs(mu)))
    report.add("lambda_tilde_matches", close(lt, cert.lambda_tilde))
    report.add("lambda_matches", close(lam, cert.lam), f"recomputed {lam:.10g}")
    c1 = eig.max() / eig.min()
    report.add("c1_valid", cert.c1 >= c1 * (1 - rtol), f"needs >= {c1:.10g}")
    c3 = lam / (cert.c2 * eig.min())
    report.add("c3_valid", cert.c3 >= c3 * (1 - rtol), f"needs >= {c3:.10g}")
    return report
