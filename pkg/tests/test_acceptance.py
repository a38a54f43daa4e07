"""Acceptance suite: one test per criterion, at the stated tolerances."""

import json
import math
import re
import time

import numpy as np
import pytest

from conftest import random_model, random_structured_P, sys1_model, sys1_pert
from qlscert import fock
from qlscert.bounded_real import (
    check_qmi,
    frequency_sweep,
    hinf_norm,
    solve_sbr_riccati,
)
from qlscert.certifier import StabilityCertificate, compute_lambda_tilde, compute_mu, halved_mu
from qlscert.cli import main
from qlscert.io import certificate_from_dict, load_model
from qlscert.model import PerturbationSpec, QuantumLinearModel, build_barB, build_barC, build_F

SEED_TRIPLE = (0.1, 1000**0.25, 2**0.25)


def rank_one_sys1(tau1, tau3, tau4, gamma=10.0, delta2=0.01, kappa=10.0):
    u2 = (tau3**2 + tau4**2) / gamma**2 + kappa * tau1**2
    v2 = delta2 * (1 / tau1**2 + 1 / tau4**2) + kappa / tau3**2
    return math.sqrt(u2 * v2) / (kappa / 2)


@pytest.fixture(scope="module")
def certified(tmp_path_factory, models_dir):
    """``qlscert certify`` on SYS1, timed."""
    out = tmp_path_factory.mktemp("acceptance") / "cert.json"
    start = time.perf_counter()
    code = main(["certify", "--model", str(models_dir / "sys1.json"), "--out", str(out)])
    elapsed = time.perf_counter() - start
    assert code == 0
    return out, elapsed


def test_criterion_1_identity_suite():
    rng = np.random.default_rng(1)
    for _ in range(10):
        model = random_model(rng, 1)
        poly = rng.normal(size=3) + 1j * rng.normal(size=3)
        rep = fock.build_fock_rep(model, PerturbationSpec(gamma=1.0, poly=poly), cutoff=12, guard_depth=4)
        report = fock.check_identities(rep, random_structured_P(rng, 1), tol=1e-9, mu_tol=1e-10)
        assert report.ok, report.residuals
        assert max(v for k, v in report.residuals.items() if k != "vi_mu_constant") <= 1e-9
        assert report.mu_offscalar <= 1e-10
        assert {"i_V_H", "ii_dissipator", "iii_x_V", "v_V_L2", "vi_mu_constant"} <= set(report.passed)


def test_criterion_2_mu_closed_form():
    rng = np.random.default_rng(2)
    for draw in range(20):
        n = 1 + draw % 2
        model = random_model(rng, n)
        rep = fock.build_fock_rep(model, cutoff=9 if n == 1 else 6, guard_depth=1)
        P = random_structured_P(rng, n)
        direct = fock.check_identities(rep, P).mu_direct
        assert abs(compute_mu(model, P) - direct) <= 1e-10 * max(1.0, abs(direct))
        # the alternative closed form equals half the transposed value
        assert halved_mu(model, P) == pytest.approx(0.5 * compute_mu(model, P.T), abs=1e-12)
    # real P: the alternative form is exactly half the commutator value
    P = np.array([[1.0, 0.3], [0.3, 1.0]])
    assert compute_mu(sys1_model(), P) == pytest.approx(0.3, abs=1e-15)
    assert halved_mu(sys1_model(), P) == pytest.approx(0.15, abs=1e-15)


def test_criterion_3_hinf_correctness():
    rng = np.random.default_rng(3)
    for k in range(25):
        m = 2 * (1 + k % 4)
        A = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        F = A - (np.linalg.eigvals(A).real.max() + 0.1 + rng.random()) * np.eye(m)
        B = rng.normal(size=(m, 2)) + 1j * rng.normal(size=(m, 2))
        C = rng.normal(size=(3, m)) + 1j * rng.normal(size=(3, m))
        bisection = hinf_norm(F, B, C).norm
        sweep, _ = frequency_sweep(F, B, C, n_points=10_000)
        assert abs(bisection - sweep) <= 1e-6 * sweep
    model, pert = sys1_model(), sys1_pert()
    value = hinf_norm(
        build_F(model), build_barB(model, *SEED_TRIPLE, pert), build_barC(model, *SEED_TRIPLE, pert)
    ).norm
    assert abs(value - rank_one_sys1(*SEED_TRIPLE)) <= 1e-4
    assert value == pytest.approx(0.150932, abs=1e-6)


def test_criterion_4_riccati(sys1_cert):
    sol = solve_sbr_riccati(np.array([[-1.0]]), np.array([[1.0]]), np.array([[0.5]]), eps=1e-14)
    assert abs(sol.P[0, 0].real - (2 - math.sqrt(3)) / 4) <= 1e-10
    solved = [a for a in sys1_cert.diagnostics["riccati_attempts"] if "residual" in a]
    assert solved
    for attempt in solved:
        assert attempt["residual"] <= 1e-8
        assert attempt["closed_loop_abscissa"] < 0


def _cross_assembly_case(case, sys1_cert):
    if case == "sys1":
        model, pert = sys1_model(), sys1_pert()
        return model, pert, sys1_cert.P, sys1_cert.tau, 10
    rng = np.random.default_rng(5)
    model = random_model(rng, 2)
    pert = PerturbationSpec(gamma=1.7, delta1=0.1, delta2=0.3, delta3=0.2)
    return model, pert, random_structured_P(rng, 2), tuple(rng.uniform(0.3, 2.0, size=5)), 6


def test_criterion_5_qmi_cross_assembly(sys1_cert):
    for case in ("sys1", "random_two_mode"):
        model, pert, P, taus, cutoff = _cross_assembly_case(case, sys1_cert)
        rep = fock.build_fock_rep(model, pert, cutoff=cutoff, guard_depth=2)
        W = check_qmi(P, model, taus, pert).W
        lt = compute_lambda_tilde(model, P)
        D = fock.dissipation_operator(rep, P, taus, pert)
        We, se = fock.extract_quadratic_form(rep, D)
        Wc, sc = fock.canonical_quadratic_form(W, lt)
        assert np.abs(We - Wc).max() <= 1e-9, case
        assert abs(se - sc) <= 1e-9, case
        # x^dag W x + lambda_tilde equals the assembled operator on the guard
        mask = fock.guard_mask(rep, 4)
        diff = (D - fock.quadratic_operator(rep, W) - lt * np.eye(rep.dim))[np.ix_(mask, mask)]
        assert np.abs(diff).max() <= 1e-9 * max(1.0, np.abs(D[np.ix_(mask, mask)]).max()), case


def test_criterion_6_end_to_end_soundness(certified, tmp_path, models_dir, capsys):
    cert_path, certify_seconds = certified
    model_path = models_dir / "sys1.json"
    model, pert = load_model(model_path)
    cert = certificate_from_dict(json.loads(cert_path.read_text()))
    rep = fock.build_fock_rep(model, pert, cutoff=12)
    assert fock.check_sector_bounds(rep).ok
    assert fock.check_theorem2(rep, cert.P, cert).lambda_max <= 1e-9

    start = time.perf_counter()
    states = [("fock", '{"n": 1}'), ("coherent", '{"alpha": 0.5}'), ("thermal", '{"nbar": 0.3}')]
    for kind, params in states:
        capsys.readouterr()
        code = main([
            "simulate", "--model", str(model_path), "--cert", str(cert_path), "--cutoff", "12",
            "--state", kind, "--state-params", params, "--slack", "1e-6",
            "--out", str(tmp_path / f"{kind}.csv"),
        ])
        report = json.loads(capsys.readouterr().out)
        assert code == 0, report
        assert report["T"] == pytest.approx(10 / cert.c2)
        assert report["bound"]["pointwise_ok"] and report["bound"]["passed"]
        assert report["bound"]["min_lyapunov_margin"] >= -1e-6
        assert report["bound"]["min_number_margin"] >= -1e-6
    assert certify_seconds + time.perf_counter() - start <= 300


def test_criterion_7_falsification(certified, tmp_path, models_dir, capsys):
    cert_path, _ = certified
    data = json.loads(cert_path.read_text())
    tampered = dict(data, c2=2 * data["c2"])
    bad_path = tmp_path / "doubled.json"
    bad_path.write_text(json.dumps(tampered))
    assert main(["check", "--model", str(models_dir / "sys1.json"), "--cert", str(bad_path)]) == 1

    model, pert = load_model(models_dir / "sys1.json")
    good = certificate_from_dict(data)
    bad = certificate_from_dict(tampered)
    rep = fock.build_fock_rep(model, pert, cutoff=12)
    traj = fock.simulate_lindblad(rep, good.P, fock.initial_state(rep, "fock", {"n": 1}), 10 / good.c2, 200)
    assert fock.verify_bound(traj, good).passed
    assert not fock.verify_bound(traj, bad).passed

    # on a certificate with exact constants the doubled rate also breaks the bound pointwise
    damping = QuantumLinearModel.from_blocks([[0]], [[0]], [[1]], [[0]], [[1]], [[0]])
    drep = fock.build_fock_rep(damping, cutoff=8, guard_depth=1)
    exact = StabilityCertificate(
        tau=(1.0,) * 5, P=np.eye(2, dtype=complex), mu=0j, lambda_tilde=1.0, lam=1.0,
        c=1.0, c1=1.0, c2=1.0, c3=1.0, qmi_lambda_max=-1.0, hinf=0.5,
    )
    dtraj = fock.simulate_lindblad(drep, np.eye(2), fock.initial_state(drep, "fock", {"n": 1}), 5.0, 50)
    assert fock.verify_bound(dtraj, exact).passed
    tight = fock.verify_bound(dtraj, StabilityCertificate(**{**exact.__dict__, "c2": 2.0}))
    assert not tight.pointwise_ok and tight.first_violation <= 1.0

    capsys.readouterr()
    out = tmp_path / "gamma.json"
    assert main(["certify", "--model", str(models_dir / "sys1_gamma005.json"), "--out", str(out)]) == 1
    assert json.loads(out.read_text())["reason"] == "no feasible scalings found"
    out = tmp_path / "undamped.json"
    assert main(["certify", "--model", str(models_dir / "undamped.json"), "--out", str(out)]) == 1
    assert json.loads(out.read_text())["reason"] == "non-Hurwitz"


def test_criterion_8_determinism(certified, tmp_path, models_dir):
    first, _ = certified
    second = tmp_path / "again.json"
    assert main(["certify", "--model", str(models_dir / "sys1.json"), "--out", str(second)]) == 0

    def strip(path):
        return re.sub(rb'\n\s*"created": "[^"]*",?', b"", path.read_bytes())

    assert strip(first) == strip(second)
    assert json.loads(first.read_text())["created"]


def test_criterion_9_lindblad_integrator():
    damping = QuantumLinearModel.from_blocks([[0]], [[0]], [[1]], [[0]], [[1]], [[0]])
    rep = fock.build_fock_rep(damping, cutoff=8, guard_depth=1)
    rho0 = fock.initial_state(rep, "fock", {"n": 1})
    traj = fock.simulate_lindblad(rep, np.eye(2), rho0, 2.0, 4, L=rep.a[0], H=np.zeros((8, 8)))
    np.testing.assert_allclose(traj.times, [0, 0.5, 1, 1.5, 2])
    photons = (traj.expNumber - 1) / 2
    for t in (0.5, 1.0, 2.0):
        k = int(np.argmin(abs(traj.times - t)))
        assert abs(photons[k] - math.exp(-t)) <= 1e-6
    assert traj.trace_err.max() <= 1e-8
