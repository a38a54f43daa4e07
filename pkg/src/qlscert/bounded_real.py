"""Hurwitz tests, H-infinity norms and the strict bounded real Riccati equation."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from ._validation import check_square, hermitian_part
from .exceptions import NotHurwitzError, RiccatiError
from .model import assemble_doubled, build_F, signature_matrix, swap_matrix

__all__ = [
    "HinfResult",
    "RiccatiSolution",
    "QMIResult",
    "spectral_abscissa",
    "sigma_max",
    "frequency_grid",
    "frequency_sweep",
    "hinf_norm",
    "solve_sbr_riccati",
    "quantum_symmetrize",
    "structure_deviation",
    "qmi_matrix",
    "check_qmi",
]

logger = logging.getLogger(__name__)


@dataclass
class HinfResult:
    norm: float
    peak_frequency: float
    iterations: int
    grid_norm: float = float("nan")


@dataclass
class RiccatiSolution:
    P: np.ndarray
    residual: float
    closed_loop_abscissa: float
    eps: float = 0.0


@dataclass
class QMIResult:
    W: np.ndarray
    lambda_max: float


def spectral_abscissa(F):
    """Largest real part over the eigenvalues of ``F``."""
    F = check_square(F, "F")
    try:
        eigs = np.linalg.eigvals(F)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(eigs.real))


def sigma_max(F, B, C, omegas):
    """Largest singular value of ``C (i w I - F)^{-1} B`` for each ``w``."""
    omegas = np.atleast_1d(np.asarray(omegas, float))
    m = F.shape[0]
    A = 1j * omegas[:, None, None] * np.eye(m) - F[None]
    X = np.linalg.solve(A, np.broadcast_to(B, (len(omegas),) + B.shape))
    G = C[None] @ X
    return np.linalg.svd(G, compute_uv=False)[:, 0]


def frequency_grid(F, n_points):
    """Two-sided log-spaced grid plus zero and the resonant frequencies of ``F``.

    The transfer function of a complex system is not conjugate symmetric, so
    negative frequencies are swept as well.
    """
    eigs = np.linalg.eigvals(F)
    mags = np.abs(eigs)
    mags = mags[mags > 0]
    lo = 1e-3 * (mags.min() if mags.size else 1.0)
    hi = 1e3 * (mags.max() if mags.size else 1.0)
    half = max(int(n_points) // 2, 1)
    pos = np.logspace(np.log10(lo), np.log10(hi), half)
    res = -eigs.imag
    return np.unique(np.concatenate([-pos[::-1], [0.0], pos, res]))


def frequency_sweep(F, B, C, n_points=10_000, refine=True):
    """Brute-force ``sup_w sigma_max`` by grid search with local refinement.

    Returns ``(value, omega)``. This is independent of the Hamiltonian test in
    :func:`hinf_norm` and serves as its cross-check.
    """
    F = np.asarray(F, complex)
    B = np.asarray(B, complex)
    C = np.asarray(C, complex)
    w = frequency_grid(F, n_points)
    s = sigma_max(F, B, C, w)
    k = int(np.argmax(s))
    best, w_best = float(s[k]), float(w[k])
    if refine and 0 < k < len(w) - 1:
        candidates = np.argsort(s)[::-1][:5]
        for j in candidates:
            if not 0 < j < len(w) - 1:
                continue
            res = minimize_scalar(
                lambda om: -sigma_max(F, B, C, [om])[0],
                bounds=(w[j - 1], w[j + 1]),
                method="bounded",
                options={"xatol": 1e-12 * max(1.0, abs(w[j]))},
            )
            if -res.fun > best:
                best, w_best = float(-res.fun), float(res.x)
    return best, w_best


def _imag_axis_frequencies(F, BB, CC, level, tol_imag):
    Ham = np.block([[F, BB / level], [-CC / level, -F.conj().T]])
    eigs = np.linalg.eigvals(Ham)
    scale = max(np.linalg.norm(Ham, 2), 1.0)
    on_axis = np.abs(eigs.real) <= tol_imag * scale
    return np.sort(eigs[on_axis].imag)


def hinf_norm(F, B, C, tol=1e-10, n_grid=10_000, cross_check=True, tol_imag=1e-9):
    """H-infinity norm of ``C (sI - F)^{-1} B`` by level-set bisection.

    A level ``g`` is below the norm exactly when the Hamiltonian
    ``[[F, BB^dag/g], [-C^dag C/g, -F^dag]]`` has an eigenvalue on the
    imaginary axis. The bracket starts at the frequency-grid maximum and is
    tightened until its width is below ``tol`` relative to the upper end.
    Imaginary-axis crossings found along the way are evaluated directly to
    lift the lower end, which makes the iteration converge in a few steps.

    Raises
    ------
    NotHurwitzError
        If ``F`` is not Hurwitz (the norm is infinite or undefined).
    """
    F = np.asarray(check_square(F, "F"), complex)
    B = np.asarray(B, complex)
    C = np.asarray(C, complex)
    alpha = spectral_abscissa(F)
    if alpha >= 0:
        raise NotHurwitzError(alpha, "norm infinite / undefined: F is not Hurwitz")

    w = frequency_grid(F, n_grid)
    s = sigma_max(F, B, C, w)
    k = int(np.argmax(s))
    lo, peak = float(s[k]), float(w[k])
    grid_norm = lo
    if lo == 0.0:
        return HinfResult(0.0, 0.0, 0, 0.0)

    BB = B @ B.conj().T
    CC = C.conj().T @ C

    hi = 2.0 * lo + 1e-12
    for _ in range(60):
        if _imag_axis_frequencies(F, BB, CC, hi, tol_imag).size == 0:
            break
        hi *= 2.0
    else:
        raise RuntimeError("hinf_norm: could not bracket the norm from above")

    iterations = 0
    level = lo * (1.0 + 0.5 * tol)
    while hi - lo > tol * hi:
        iterations += 1
        if iterations > 200:
            raise RuntimeError("hinf_norm: bisection did not converge")
        ws = _imag_axis_frequencies(F, BB, CC, level, tol_imag)
        crossing = False
        if ws.size:
            probes = np.concatenate([ws, 0.5 * (ws[1:] + ws[:-1])])
            vals = sigma_max(F, B, C, probes)
            j = int(np.argmax(vals))
            # a genuine crossing reaches the level; anything else is an
            # eigenvalue that only looked close to the axis
            crossing = vals[j] >= level * (1.0 - 1e-7)
        if crossing:
            previous = lo
            if vals[j] > lo:
                lo, peak = float(vals[j]), float(probes[j])
            lo = max(lo, min(level, float(vals[j])))
            stalled = lo <= previous * (1.0 + tol)
            level = 0.5 * (lo + hi) if stalled else lo * (1.0 + 0.5 * tol)
        else:
            hi = level
            level = lo * (1.0 + 0.5 * tol)

    norm = 0.5 * (lo + hi)
    if cross_check and norm < grid_norm * (1.0 - 1e-8):
        raise RuntimeError(
            f"hinf_norm: level-set value {norm} below grid lower bound {grid_norm}"
        )
    return HinfResult(norm, peak, iterations, grid_norm)


def _riccati_residual(F, R, Q, P):
    return F.conj().T @ P + P @ F + P @ R @ P + Q


def solve_sbr_riccati(F, B, C, eps=None, tol_res=1e-8):
    """Stabilizing solution of ``F^dag P + P F + 2 P B B^dag P + 1/2 C^dag C + eps I = 0``.

    Uses the ordered complex Schur form of the Hamiltonian matrix
    ``[[F, 2BB^dag], [-(C^dag C/2 + eps I), -F^dag]]``: the stable invariant
    subspace ``[U1; U2]`` gives ``P = U2 U1^{-1}``.

    Parameters
    ----------
    eps : float, optional
        Strictness offset. Defaults to ``1e-8 * ||C^dag C||_2`` (or ``1e-8``
        when ``C`` is zero).
    tol_res : float
        Residual tolerance relative to ``max(1, ||C^dag C||_F)``.

    Raises
    ------
    RiccatiError
        If no stabilizing positive definite solution exists.
    """
    F = np.asarray(check_square(F, "F"), complex)
    B = np.asarray(B, complex)
    C = np.asarray(C, complex)
    m = F.shape[0]
    CC = C.conj().T @ C
    if eps is None:
        scale = np.linalg.norm(CC, 2)
        eps = 1e-8 * (scale if scale > 0 else 1.0)
    if eps <= 0:
        raise ValueError("eps must be positive")
    R = 2.0 * B @ B.conj().T
    Q = 0.5 * CC + eps * np.eye(m)

    def fail(msg):
        try:
            norm = hinf_norm(F, B, C, n_grid=512, cross_check=False).norm
        except NotHurwitzError:
            norm = float("inf")
        return RiccatiError(msg, norm=norm)

    Ham = np.block([[F, R], [-Q, -F.conj().T]])
    _, Z, sdim = sla.schur(Ham, output="complex", sort="lhp")
    if sdim != m:
        raise fail(f"Hamiltonian has {sdim} stable eigenvalues, expected {m}")
    U1, U2 = Z[:m, :m], Z[m:, :m]
    if np.linalg.cond(U1) > 1e12:
        raise fail("stable invariant subspace is not a graph")
    P = hermitian_part(np.linalg.solve(U1.T, U2.T).T)

    residual = float(np.linalg.norm(_riccati_residual(F, R, Q, P)))
    cl = spectral_abscissa(F + R @ P)
    if np.linalg.eigvalsh(P).min() <= 0 or cl >= 0:
        raise fail("no stabilizing positive definite solution")
    if residual > tol_res * max(1.0, np.linalg.norm(CC)):
        raise fail(f"Riccati residual {residual:.3e} above tolerance")
    return RiccatiSolution(P=P, residual=residual, closed_loop_abscissa=cl, eps=eps)


def quantum_symmetrize(P, Sigma=None):
    """Project a Hermitian ``P`` onto the doubled-up form ``1/2 (P + Sigma P# Sigma)``."""
    P = np.asarray(P, complex)
    if Sigma is None:
        Sigma = swap_matrix(P.shape[0] // 2)
    return hermitian_part(0.5 * (P + Sigma @ P.conj() @ Sigma))


def structure_deviation(P):
    """Relative distance of ``P`` from the doubled-up form."""
    P = np.asarray(P, complex)
    Sigma = swap_matrix(P.shape[0] // 2)
    return float(
        np.linalg.norm(P - Sigma @ P.conj() @ Sigma) / max(np.linalg.norm(P), 1e-300)
    )


def qmi_matrix(model, pert, P, taus):
    """Left-hand side of the scaled quadratic matrix inequality.

    ``taus`` is ``(tau1, tau2, tau3, tau4, tau5)``; ``tau2`` and ``tau5`` may be
    zero, which gives the base inequality before they are chosen.
    """
    tau1, tau2, tau3, tau4, tau5 = (float(t) for t in taus)
    dm = assemble_doubled(model)
    J = signature_matrix(model.n)
    F = build_F(model)
    E, Nt = dm.Etilde, dm.Ntilde
    EE = E.conj().T @ E
    NN = Nt.conj().T @ Nt
    inner = 2 * pert.delta2 * (1 / tau1**2 + 1 / tau4**2) * J @ EE @ J
    inner = inner + (2 / tau3**2) * J @ NN @ J
    W = F.conj().T @ P + P @ F + P @ inner @ P
    W = W + (tau3**2 + tau4**2 + tau5**2) / (2 * pert.gamma**2) * EE
    W = W + (tau1**2 + tau2**2) / 2 * NN
    return hermitian_part(W)


def check_qmi(P, model, taus, pert):
    """Assemble the inequality and return it with its largest eigenvalue."""
    W = qmi_matrix(model, pert, np.asarray(P, complex), taus)
    return QMIResult(W=W, lambda_max=float(np.linalg.eigvalsh(W).max()))
