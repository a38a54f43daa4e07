"""Dense truncated Fock-space oracle.

Every operator of the model is represented as a matrix on ``d**n`` number
states. Products of truncated ladder matrices are exact on states far enough
below the cutoff, so each check is evaluated on a *guard* subspace: states
whose excitation in every mode is below ``cutoff - depth``, where ``depth``
bounds the number of creation operators any term applies.

None of the routines here reuse the certifier's matrix algebra; they build
operators from ladder matrices and compare against its outputs.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import expm_multiply

from .exceptions import IntegrationError, TruncationError
from .model import assemble_doubled, build_F, check_model, signature_matrix

__all__ = [
    "FockRep",
    "Trajectory",
    "IdentityReport",
    "SectorReport",
    "Theorem2Report",
    "BoundReport",
    "ladder",
    "build_fock_rep",
    "guard_mask",
    "quadratic_operator",
    "dissipator_adjoint",
    "generator",
    "canonical_quadratic_form",
    "extract_quadratic_form",
    "dissipation_operator",
    "check_identities",
    "check_sector_bounds",
    "check_theorem2",
    "initial_state",
    "simulate_lindblad",
    "linear_moment_number",
    "verify_bound",
]

logger = logging.getLogger(__name__)

MAX_DIM = 4096


def ladder(d):
    """Single-mode annihilation operator ``sum_k sqrt(k) |k-1><k|`` on ``d`` levels."""
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def comm(A, B):
    return A @ B - B @ A


def dag(A):
    return A.conj().T


def _poly(coeffs, Z):
    out = np.zeros_like(Z)
    power = np.eye(Z.shape[0], dtype=complex)
    for ck in coeffs:
        out = out + ck * power
        power = power @ Z
    return out


@dataclass(eq=False)
class FockRep:
    n: int
    cutoff: int
    guard: int
    a: list
    x: list
    H: np.ndarray
    L1: np.ndarray
    zeta: np.ndarray
    L2: np.ndarray
    levels: np.ndarray
    model: object = None
    pert: object = None

    @property
    def dim(self):
        return self.cutoff**self.n

    @property
    def degree(self):
        if self.pert is None or self.pert.poly is None:
            return None
        return len(self.pert.poly) - 1


def build_fock_rep(model, pert=None, cutoff=12, guard_depth=None, max_dim=MAX_DIM):
    """Matrices for ``a``, ``H``, ``L1``, ``zeta`` and ``L2 = f(zeta)``.

    ``guard_depth`` defaults to the polynomial degree plus one (or 3 when no
    polynomial is given).
    """
    model = check_model(model, pert)
    n = model.n
    degree = None if pert is None or pert.poly is None else len(pert.poly) - 1
    if guard_depth is None:
        guard_depth = (degree if degree is not None else 2) + 1
    if cutoff < guard_depth + max(2, (degree or 0) + 1):
        raise TruncationError(
            f"cutoff {cutoff} too small for guard {guard_depth} and degree {degree}"
        )
    dim = cutoff**n
    if dim > max_dim:
        raise TruncationError(
            f"Fock dimension {dim} exceeds cap {max_dim}; reduce the cutoff or mode count"
        )
    a1 = ladder(cutoff)
    eye = np.eye(cutoff, dtype=complex)
    a = []
    for i in range(n):
        op = np.ones((1, 1), complex)
        for j in range(n):
            op = np.kron(op, a1 if i == j else eye)
        a.append(op)
    x = a + [dag(ai) for ai in a]

    dm = assemble_doubled(model)
    H = 0.5 * _quad(x, dm.M)
    H = 0.5 * (H + dag(H))
    L1 = sum(dm.Ntilde[0, j] * x[j] for j in range(2 * n))
    zeta = sum(dm.Etilde[0, j] * x[j] for j in range(2 * n))
    L2 = _poly(pert.poly, zeta) if degree is not None else np.zeros((dim, dim), complex)
    levels = np.array(list(np.ndindex(*(cutoff,) * n)), dtype=int).reshape(dim, n)
    return FockRep(
        n=n,
        cutoff=cutoff,
        guard=guard_depth,
        a=a,
        x=x,
        H=H,
        L1=L1,
        zeta=zeta,
        L2=L2,
        levels=levels,
        model=model,
        pert=pert,
    )


def _quad(x, W):
    out = np.zeros_like(x[0])
    for i, j in zip(*np.nonzero(W)):
        out = out + W[i, j] * dag(x[i]) @ x[j]
    return out


def quadratic_operator(rep, W):
    """The operator ``x^dag W x``."""
    return _quad(rep.x, np.asarray(W, complex))


def guard_mask(rep, depth=None):
    depth = rep.guard if depth is None else depth
    return np.all(rep.levels < rep.cutoff - depth, axis=1)


def _compress(A, mask):
    return A[np.ix_(mask, mask)]


def dissipator_adjoint(L, X):
    """``1/2 L^dag [X, L] + 1/2 [L^dag, X] L``."""
    Ld = dag(L)
    return 0.5 * Ld @ comm(X, L) + 0.5 * comm(Ld, X) @ L


def generator(rep, X, L):
    """Heisenberg drift ``-i [X, H] + dissipator_adjoint(L, X)``."""
    return -1j * comm(X, rep.H) + dissipator_adjoint(L, X)


def canonical_quadratic_form(W, offset):
    """Unique doubled-up representative of ``x^dag W x + offset``.

    ``x^dag (Sigma W# Sigma) x = x^dag W x + tr(J W)``, so averaging ``W`` with
    its image keeps the operator fixed once the offset absorbs ``tr(J W) / 2``.
    """
    W = np.asarray(W, complex)
    m = W.shape[0]
    n = m // 2
    S = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    J = signature_matrix(n)
    Wc = 0.5 * (W + S @ W.conj() @ S)
    return Wc, complex(offset - 0.5 * np.trace(J @ W))


def extract_quadratic_form(rep, O):
    """Read ``(W, offset)`` of a quadratic operator off its low Fock matrix elements.

    Uses ``<0|O|0>``, ``<1_i|O|1_j>`` and the two-excitation elements, then
    returns the doubled-up representative (see :func:`canonical_quadratic_form`).
    """
    n, d = rep.n, rep.cutoff

    def index(occ):
        return int(np.ravel_multi_index(tuple(occ), (d,) * n))

    def state(*modes):
        occ = [0] * n
        for k in modes:
            occ[k] += 1
        return index(occ)

    vac = state()
    s = O[vac, vac]
    K = np.empty((n, n), complex)
    A = np.empty((n, n), complex)
    B = np.empty((n, n), complex)
    for i in range(n):
        for j in range(n):
            K[i, j] = O[state(i), state(j)] - (s if i == j else 0)
            two = state(i, j)
            factor = math.sqrt(2) if i == j else 2.0
            A[i, j] = O[two, vac] / factor
            B[i, j] = O[vac, two] / factor
    W = np.block([[K / 2, A], [B, K.T / 2]])
    return W, complex(s - np.trace(K) / 2)


def dissipation_operator(rep, P, taus, pert):
    """Left side of the dissipation inequality without the ``c V`` term.

    ``-i[V,H] + L_{L1}(V) + (tau1^2+tau2^2)/2 L1^* L1
    + d2 (1/(2 tau1^2) + 1/(2 tau4^2)) [V,zeta]^* [V,zeta]
    + (tau3^2+tau4^2+tau5^2)/(2 gamma^2) zeta^* zeta + [V,L1]^* [V,L1] / (2 tau3^2)``
    """
    tau1, tau2, tau3, tau4, tau5 = taus
    V = quadratic_operator(rep, P)
    Vz = comm(V, rep.zeta)
    VL = comm(V, rep.L1)
    out = -1j * comm(V, rep.H) + dissipator_adjoint(rep.L1, V)
    out = out + (tau1**2 + tau2**2) / 2 * dag(rep.L1) @ rep.L1
    out = out + pert.delta2 * (1 / (2 * tau1**2) + 1 / (2 * tau4**2)) * dag(Vz) @ Vz
    out = out + (tau3**2 + tau4**2 + tau5**2) / (2 * pert.gamma**2) * dag(rep.zeta) @ rep.zeta
    out = out + dag(VL) @ VL / (2 * tau3**2)
    return out


@dataclass
class IdentityReport:
    residuals: dict = field(default_factory=dict)
    passed: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    mu_direct: complex = 0j
    mu_offscalar: float = 0.0
    tol: float = 1e-9

    @property
    def ok(self):
        return all(self.passed.values())


def _relative(lhs, rhs, mask):
    l, r = _compress(lhs, mask), _compress(rhs, mask)
    scale = max(np.linalg.norm(l), np.linalg.norm(r), 1.0)
    return float(np.linalg.norm(l - r) / scale)


class _Assessor:
    """Evaluate a residual at the configured guard and, if shallower than
    needed, again at the required depth to separate boundary artefacts."""

    def __init__(self, rep, tol, report):
        self.rep, self.tol, self.report = rep, tol, report

    def __call__(self, name, lhs, rhs, required):
        rep = self.rep
        res = _relative(lhs, rhs, guard_mask(rep))
        ok = res <= self.tol
        boundary = False
        if not ok and rep.guard < required < rep.cutoff:
            deep = _relative(lhs, rhs, guard_mask(rep, required))
            boundary = deep <= self.tol
        self.report.residuals[name] = res
        self.report.passed[name] = ok
        self.report.boundary[name] = boundary


def check_identities(rep, P, tol=1e-9, mu_tol=1e-10):
    """Verify the commutator identities for ``V = x^dag P x`` on the guard.

    (i)   ``[V, H] = x^dag (P J M - M J P) x``
    (ii)  ``L_{L1}(V) = tr(P J N^dag [[I,0],[0,0]] N J) - 1/2 x^dag (N^dag J N J P + P J N^dag J N) x``
    (iii) ``[x, V] = 2 J P x``
    (iv)  ``[V, zeta^k] = k zeta^{k-1} [V, zeta] + k (k-1) zeta^{k-2} mu`` for ``k = 0..K``
    (v)   ``[V, f(zeta)] = f'(zeta) [V, zeta] + f''(zeta) mu``
    (vi)  ``-1/2 [zeta, [V, zeta]]`` is a multiple of the identity

    ``P`` must be Hermitian and of doubled-up form.
    """
    model = rep.model
    n = rep.n
    P = np.asarray(P, complex)
    dm = assemble_doubled(model)
    J = signature_matrix(n)
    report = IdentityReport(tol=tol)
    check = _Assessor(rep, tol, report)
    eye = np.eye(rep.dim, dtype=complex)
    mask = guard_mask(rep)

    V = quadratic_operator(rep, P)
    Vz = comm(V, rep.zeta)
    mu_op = -0.5 * comm(rep.zeta, Vz)

    def offscalar(depth):
        g = _compress(mu_op, guard_mask(rep, depth))
        value = complex(np.mean(np.diag(g)))
        return value, float(np.abs(g - value * np.eye(g.shape[0])).max())

    # [zeta, [V, zeta]] applies up to four creation operators
    mu_depth = min(max(rep.guard, 4), rep.cutoff - 1)
    mu, _ = offscalar(mu_depth)
    report.mu_direct = mu
    _, report.mu_offscalar = offscalar(rep.guard)
    report.residuals["vi_mu_constant"] = report.mu_offscalar
    report.passed["vi_mu_constant"] = report.mu_offscalar <= mu_tol
    report.boundary["vi_mu_constant"] = (
        not report.passed["vi_mu_constant"] and offscalar(mu_depth)[1] <= mu_tol
    )

    check("i_V_H", comm(V, rep.H), quadratic_operator(rep, P @ J @ dm.M - dm.M @ J @ P), 4)

    N = dm.N
    k = N.shape[0] // 2
    Jc = signature_matrix(k)
    upper = np.diag(np.r_[np.ones(k), np.zeros(k)])
    trace_term = np.trace(P @ J @ dag(N) @ upper @ N @ J)
    rhs = trace_term * eye - 0.5 * quadratic_operator(
        rep, dag(N) @ Jc @ N @ J @ P + P @ J @ dag(N) @ Jc @ N
    )
    check("ii_dissipator", dissipator_adjoint(rep.L1, V), rhs, 4)

    JP = J @ P
    worst = max(
        range(2 * n),
        key=lambda i: _relative(
            comm(rep.x[i], V), 2 * sum(JP[i, j] * rep.x[j] for j in range(2 * n)), mask
        ),
    )
    lhs = comm(rep.x[worst], V)
    rhs = 2 * sum(JP[worst, j] * rep.x[j] for j in range(2 * n))
    check("iii_x_V", lhs, rhs, 3)

    K = rep.degree if rep.degree is not None else 2
    powers = [eye]
    for _ in range(K + 1):
        powers.append(powers[-1] @ rep.zeta)
    for k in range(K + 1):
        rhs = np.zeros_like(eye)
        if k >= 1:
            rhs = rhs + k * powers[k - 1] @ Vz
        if k >= 2:
            rhs = rhs + k * (k - 1) * mu * powers[k - 2]
        check(f"iv_V_zeta^{k}", comm(V, powers[k]), rhs, k + 2)

    if rep.degree is not None:
        f1 = _poly(rep.pert.derivative_coeffs(1), rep.zeta)
        f2 = _poly(rep.pert.derivative_coeffs(2), rep.zeta)
        check("v_V_L2", comm(V, rep.L2), f1 @ Vz + mu * f2, K + 2)
    return report


@dataclass
class SectorReport:
    lambda_min: dict = field(default_factory=dict)
    passed: dict = field(default_factory=dict)
    depth: int = 0
    note: str = (
        "truncated-space evidence only: bounds are checked on the guard "
        "subspace, not on the full Fock space"
    )

    @property
    def ok(self):
        return all(self.passed.values())


def check_sector_bounds(rep, pert=None, tol=1e-12):
    """Check ``f^* f <= zeta^* zeta / gamma^2 + d1``, ``f'^* f' <= d2``, ``f''^* f'' <= d3``."""
    pert = rep.pert if pert is None else pert
    if pert.poly is None:
        raise ValueError("sector checks need concrete polynomial coefficients")
    K = len(pert.poly) - 1
    depth = max(rep.guard, 2 * K, 1)
    if depth >= rep.cutoff:
        raise TruncationError(f"cutoff {rep.cutoff} too small for guard depth {depth}")
    mask = guard_mask(rep, depth)
    eye = np.eye(rep.dim, dtype=complex)
    Z = rep.zeta
    f0 = _poly(pert.poly, Z)
    f1 = _poly(pert.derivative_coeffs(1), Z)
    f2 = _poly(pert.derivative_coeffs(2), Z)
    gaps = {
        "sector_f": dag(Z) @ Z / pert.gamma**2 + pert.delta1 * eye - dag(f0) @ f0,
        "sector_df": pert.delta2 * eye - dag(f1) @ f1,
        "sector_ddf": pert.delta3 * eye - dag(f2) @ f2,
    }
    report = SectorReport(depth=depth)
    for name, gap in gaps.items():
        g = _compress(gap, mask)
        lam = float(np.linalg.eigvalsh(0.5 * (g + dag(g))).min())
        report.lambda_min[name] = lam
        report.passed[name] = lam >= -tol
    return report


@dataclass
class Theorem2Report:
    lambda_max: float
    chain_lambda_max: float
    depth: int
    shallow_lambda_max: float = float("nan")

    @property
    def ok(self):
        return self.lambda_max <= 0


def check_theorem2(rep, P, cert, tol=1e-9):
    """Largest eigenvalue of ``G(V) + c V - lambda`` on the guard.

    ``G`` is built directly from the generator with ``L = L1 + L2``. The
    intermediate inequality (dissipation operator ``+ c V - lambda_tilde``)
    is evaluated as well; both should be non-positive.
    """
    K = rep.degree if rep.degree is not None else 1
    required = 2 * max(K, 1) + 2
    if required >= rep.cutoff:
        raise TruncationError(f"cutoff {rep.cutoff} too small for guard depth {required}")
    P = np.asarray(P, complex)
    V = quadratic_operator(rep, P)
    eye = np.eye(rep.dim, dtype=complex)
    total = generator(rep, V, rep.L1 + rep.L2) + cert.c * V - cert.lam * eye
    chain = dissipation_operator(rep, P, cert.tau, rep.pert) + cert.c * V - cert.lambda_tilde * eye

    def top(A, depth):
        g = _compress(A, guard_mask(rep, depth))
        return float(np.linalg.eigvalsh(0.5 * (g + dag(g))).max())

    depth = max(rep.guard, required)
    report = Theorem2Report(
        lambda_max=top(total, depth),
        chain_lambda_max=top(chain, depth),
        depth=depth,
    )
    if rep.guard < required:
        report.shallow_lambda_max = top(total, rep.guard)
    return report


def initial_state(rep, kind, params=None, seed=None):
    """Density matrix for a product initial state.

    ``kind`` is one of

    - ``"fock"``: ``{"n": k}``, or a list of ``n`` occupations;
    - ``"coherent"``: ``{"alpha": a}`` with ``a`` real or ``[re, im]``, or
      ``{"alphas": [...]}`` per mode;
    - ``"thermal"``: ``{"nbar": x}``, or a list per mode;
    - ``"random"``: a pure state on the guard subspace drawn from ``seed``.

    Coherent and thermal states are truncated and renormalized.
    """
    params = dict(params or {})
    d = rep.cutoff

    def per_mode(value):
        return list(value) if isinstance(value, (list, tuple)) else [value] * rep.n

    def as_complex(z):
        return complex(*z) if isinstance(z, (list, tuple)) else complex(z)

    if kind == "fock":
        occ = [int(k) for k in per_mode(params.get("n", 0))]
        if len(occ) != rep.n or any(k < 0 or k >= d for k in occ):
            raise ValueError(f"invalid Fock occupation {occ} for cutoff {d}")
        psi = np.zeros(rep.dim, complex)
        psi[np.ravel_multi_index(tuple(occ), (d,) * rep.n)] = 1.0
        return np.outer(psi, psi.conj())
    if kind == "coherent":
        if "alphas" in params:
            alphas = [as_complex(z) for z in params["alphas"]]
        else:
            alphas = [as_complex(params.get("alpha", 0.0))] * rep.n
        if len(alphas) != rep.n:
            raise ValueError(f"need {rep.n} coherent amplitudes, got {len(alphas)}")
        psi = np.ones(1, complex)
        k = np.arange(d)
        log_fact = np.array([math.lgamma(kk + 1) for kk in k])
        for al in alphas:
            amp = np.exp(-0.5 * log_fact) * al**k
            psi = np.kron(psi, amp / np.linalg.norm(amp))
        return np.outer(psi, psi.conj())
    if kind == "thermal":
        nbars = [float(x) for x in per_mode(params.get("nbar", 0.0))]
        if len(nbars) != rep.n or any(x < 0 for x in nbars):
            raise ValueError(f"invalid thermal occupations {nbars}")
        rho = np.ones((1, 1), complex)
        for nb in nbars:
            p = (nb / (1.0 + nb)) ** np.arange(d)
            rho = np.kron(rho, np.diag(p / p.sum()))
        return rho
    if kind == "random":
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=rep.dim) + 1j * rng.normal(size=rep.dim)
        psi[~guard_mask(rep)] = 0
        psi /= np.linalg.norm(psi)
        return np.outer(psi, psi.conj())
    raise ValueError(f"unknown initial state kind {kind!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    expV: np.ndarray
    expNumber: np.ndarray
    trace_err: np.ndarray
    cross_check_error: float = float("nan")
    hermiticity_err: float = 0.0
    substeps: int = 0


def _liouvillian(H, L):
    d = H.shape[0]
    eye = np.eye(d)
    LdL = dag(L) @ L
    return (
        -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        + np.kron(L, L.conj())
        - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    )


def simulate_lindblad(
    rep,
    P,
    rho0,
    T,
    steps=200,
    tol_trace=1e-8,
    cross_check_dim=64,
    cross_check_tol=1e-6,
    L=None,
    H=None,
):
    """Integrate ``drho/dt = -i[H,rho] + L rho L^dag - 1/2 {L^dag L, rho}`` with RK4.

    ``L`` defaults to ``L1 + L2`` and ``H`` to the model Hamiltonian. Records
    ``<V>`` for ``V = x^dag P x``, ``<x^dag x>`` and the trace drift at
    ``steps + 1`` equally spaced times. The internal step keeps
    ``h * ||Liouvillian|| <= 0.1``. For ``dim <= cross_check_dim`` five sample
    times are compared against the exact exponential of the Liouvillian.
    """
    H = rep.H if H is None else np.asarray(H, complex)
    L = rep.L1 + rep.L2 if L is None else np.asarray(L, complex)
    rho0 = np.asarray(rho0, complex)
    if np.linalg.norm(rho0 - dag(rho0)) > 1e-12:
        raise ValueError("rho0 must be Hermitian")
    if abs(np.trace(rho0) - 1) > 1e-10:
        raise ValueError("rho0 must have unit trace")
    if np.linalg.eigvalsh(rho0).min() < -1e-12:
        raise ValueError("rho0 must be positive semidefinite")

    V = quadratic_operator(rep, P)
    X = quadratic_operator(rep, np.eye(2 * rep.n))
    LdL = dag(L) @ L
    Ld = dag(L)

    def rhs(rho):
        return -1j * (H @ rho - rho @ H) + L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)

    lnorm = 2 * np.linalg.norm(H, 2) + 2 * np.linalg.norm(L, 2) ** 2
    dt = T / steps
    sub = max(1, math.ceil(dt * lnorm / 0.1))
    h = dt / sub

    times = np.linspace(0.0, T, steps + 1)
    expV = np.empty(steps + 1)
    expN = np.empty(steps + 1)
    terr = np.empty(steps + 1)
    samples = {}
    sample_idx = set(np.linspace(0, steps, 5).round().astype(int).tolist())
    rho = rho0.copy()
    herm = 0.0
    for k in range(steps + 1):
        if k > 0:
            for _ in range(sub):
                k1 = rhs(rho)
                k2 = rhs(rho + 0.5 * h * k1)
                k3 = rhs(rho + 0.5 * h * k2)
                k4 = rhs(rho + h * k3)
                rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        expV[k] = np.trace(V @ rho).real
        expN[k] = np.trace(X @ rho).real
        terr[k] = abs(np.trace(rho) - 1)
        herm = max(herm, float(np.abs(rho - dag(rho)).max()))
        if terr[k] > tol_trace:
            raise IntegrationError(
                f"trace drift {terr[k]:.2e} at t={times[k]:.4g}; reduce the step"
            )
        if k in sample_idx:
            samples[k] = rho.copy()

    err = float("nan")
    if rep.dim <= cross_check_dim:
        Lsup = _liouvillian(H, L)
        err = 0.0
        for k, rho_k in samples.items():
            exact = expm_multiply(Lsup * times[k], rho0.reshape(-1)).reshape(rho0.shape)
            err = max(err, float(np.abs(exact - rho_k).max()))
        if err > cross_check_tol:
            raise IntegrationError(
                f"RK4 deviates from the exact propagator by {err:.2e}; reduce the step"
            )
    return Trajectory(
        times, expV, expN, terr, cross_check_error=err, hermiticity_err=herm, substeps=sub
    )


def linear_moment_number(model, rep, rho0, times):
    """``<x^dag x>(t)`` from the linear moment flow driven by ``F`` (no ``L2``).

    ``Y_ij = <x_j^* x_i>`` obeys ``dY/dt = F Y + Y F^dag + D`` with
    ``D = J N^dag [[I,0],[0,0]] N J``; the result is ``tr Y(t)``.
    """
    import scipy.linalg as sla

    model = check_model(model)
    n = model.n
    F = build_F(model)
    N = assemble_doubled(model).N
    J = signature_matrix(n)
    k = N.shape[0] // 2
    D = J @ dag(N) @ np.diag(np.r_[np.ones(k), np.zeros(k)]) @ N @ J
    m = 2 * n
    Y0 = np.array(
        [[np.trace(dag(rep.x[j]) @ rep.x[i] @ rho0) for j in range(m)] for i in range(m)]
    )
    Yss = sla.solve_continuous_lyapunov(F, -D)
    out = []
    for t in np.atleast_1d(times):
        E = sla.expm(F * t)
        out.append(np.trace(Yss + E @ (Y0 - Yss) @ dag(E)).real)
    return np.array(out)


@dataclass
class BoundReport:
    passed: bool
    pointwise_ok: bool
    consistent: bool
    lyapunov_margin: np.ndarray
    number_margin: np.ndarray
    first_violation: float = None
    issues: list = field(default_factory=list)

    def to_dict(self):
        return {
            "passed": self.passed,
            "pointwise_ok": self.pointwise_ok,
            "consistent": self.consistent,
            "min_lyapunov_margin": float(self.lyapunov_margin.min()),
            "min_number_margin": float(self.number_margin.min()),
            "first_violation": self.first_violation,
            "issues": list(self.issues),
        }


def verify_bound(traj, cert, slack=1e-6):
    """Check the decay bounds pointwise along a trajectory.

    ``<V(t)> <= exp(-c2 t) <V(0)> + lambda / c`` and
    ``<x^dag x>(t) <= c1 exp(-c2 t) <x^dag x>(0) + c3``, each with tolerance
    ``slack * max(1, |rhs|)``. The certificate's constants are also checked
    for mutual consistency (``c2 = c``, ``c1``, ``c3`` at least their values
    implied by ``P`` and ``lambda``); margins are ``rhs - lhs``.
    """
    t = traj.times
    rhs_v = np.exp(-cert.c2 * t) * traj.expV[0] + cert.lam / cert.c
    rhs_n = cert.c1 * np.exp(-cert.c2 * t) * traj.expNumber[0] + cert.c3
    margin_v = rhs_v - traj.expV
    margin_n = rhs_n - traj.expNumber
    bad_v = margin_v < -slack * np.maximum(1.0, np.abs(rhs_v))
    bad_n = margin_n < -slack * np.maximum(1.0, np.abs(rhs_n))
    bad = bad_v | bad_n
    issues = []
    if bad_v.any():
        issues.append("Lyapunov bound violated")
    if bad_n.any():
        issues.append("mean square bound violated")

    eig = np.linalg.eigvalsh(np.asarray(cert.P, complex))
    consistent = True
    if abs(cert.c2 - cert.c) > 1e-9 * max(1.0, abs(cert.c)):
        consistent = False
        issues.append("c2 differs from the decay rate c")
    if cert.c1 < eig.max() / eig.min() * (1 - 1e-9):
        consistent = False
        issues.append("c1 below lambda_max(P)/lambda_min(P)")
    if cert.c3 < cert.lam / (cert.c2 * eig.min()) * (1 - 1e-9):
        consistent = False
        issues.append("c3 below lambda/(c2 lambda_min(P))")

    pointwise = not bad.any()
    return BoundReport(
        passed=pointwise and consistent,
        pointwise_ok=pointwise,
        consistent=consistent,
        lyapunov_margin=margin_v,
        number_margin=margin_n,
        first_violation=float(t[np.argmax(bad)]) if bad.any() else None,
        issues=issues,
    )
