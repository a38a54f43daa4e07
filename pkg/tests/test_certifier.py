import dataclasses

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from conftest import random_structured_P, sys1_model, sys1_pert
from qlscert.bounded_real import check_qmi, structure_deviation
from qlscert.certifier import (
    REASON_NON_HURWITZ,
    REASON_NO_SCALINGS,
    certify,
    compute_c,
    compute_lambda_tilde,
    compute_mu,
    halved_mu,
    select_tau25,
    verify_certificate,
)
from qlscert.estimator import RobustStabilityCertifier
from qlscert.exceptions import InfeasibleError
from qlscert.model import PerturbationSpec, QuantumLinearModel


def pinned(cert):
    tau1, _, tau3, tau4, _ = cert.tau
    return (tau1, tau3, tau4)


def test_sys1_certificate(sys1, sys1_cert):
    cert = sys1_cert
    assert cert.hinf <= 0.21
    assert cert.c > 0 and cert.c2 == cert.c
    assert cert.c1 >= 1
    assert cert.c3 > 0 and cert.lam >= cert.lambda_tilde > 0
    assert cert.qmi_lambda_max < 0
    assert structure_deviation(cert.P) <= 1e-12
    assert verify_certificate(*sys1, cert).ok


def test_emitted_P_comes_from_a_clean_riccati_solve(sys1_cert):
    attempt = sys1_cert.diagnostics["riccati_attempts"][-1]
    assert attempt["status"] == "ok"
    assert attempt["residual"] <= 1e-8
    assert attempt["closed_loop_abscissa"] < 0


def test_mu_examples():
    model = sys1_model()
    assert compute_mu(model, np.eye(2)) == 0
    P = np.array([[1.0, 0.3], [0.3, 1.0]])
    assert compute_mu(model, P) == pytest.approx(0.3, abs=1e-15)
    assert halved_mu(model, P) == pytest.approx(0.15, abs=1e-15)


def test_halved_form_is_half_of_transposed_mu(rng):
    for n in (1, 2, 3):
        E = rng.normal(size=(1, n)) + 1j * rng.normal(size=(1, n))
        E2 = rng.normal(size=(1, n)) + 1j * rng.normal(size=(1, n))
        model = QuantumLinearModel.from_blocks(np.eye(n), np.zeros((n, n)), np.ones((1, n)), np.zeros((1, n)), E, E2)
        P = random_structured_P(rng, n)
        assert halved_mu(model, P) == pytest.approx(0.5 * compute_mu(model, P.T), abs=1e-12)


def test_lambda_tilde_sys1():
    assert compute_lambda_tilde(sys1_model(), np.eye(2)) == pytest.approx(10.0)


def test_lambda_tilde_clamps_roundoff():
    with pytest.warns(RuntimeWarning):
        assert compute_lambda_tilde(sys1_model(), -1e-14 * np.eye(2)) == 0.0
    with pytest.raises(ValueError):
        compute_lambda_tilde(sys1_model(), -np.eye(2))


def test_compute_c_generalized_eigenvalue():
    W = -np.diag([2.0, 6.0])
    P = np.diag([1.0, 2.0])
    assert compute_c(W, P) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        compute_c(-W, P)


def test_scale_covariance(rng, sys1_cert):
    model = sys1_model()
    P = random_structured_P(rng, 1)
    W = -np.diag([3.0, 1.0]) - 0.1 * P
    for alpha in (0.5, 7.0):
        assert compute_c(alpha * W, alpha * P) == pytest.approx(compute_c(W, P), rel=1e-12)
        assert compute_lambda_tilde(model, alpha * P) == pytest.approx(alpha * compute_lambda_tilde(model, P))
        assert compute_mu(model, alpha * P) == pytest.approx(alpha * compute_mu(model, P))
        eig = np.linalg.eigvalsh(alpha * P)
        eig0 = np.linalg.eigvalsh(P)
        assert eig.max() / eig.min() == pytest.approx(eig0.max() / eig0.min())


def test_delta1_only_shifts_c3(sys1_cert):
    model = sys1_model()
    base = certify(model, sys1_pert(), scalings=pinned(sys1_cert))
    d1 = 0.35
    more = certify(model, sys1_pert(delta1=0.1 + d1), scalings=pinned(sys1_cert))
    np.testing.assert_allclose(more.P, base.P)
    assert (more.c, more.c1, more.c2) == pytest.approx((base.c, base.c1, base.c2))
    _, _, t3, t4, t5 = base.tau
    lmin = np.linalg.eigvalsh(base.P).min()
    expected = d1 * (t3**2 + t4**2 + t5**2) / (2 * base.c * lmin)
    assert more.c3 - base.c3 == pytest.approx(expected, rel=1e-9)


def test_default_tau25_keeps_half_the_margin(sys1_cert):
    model, pert = sys1_model(), sys1_pert()
    triple = pinned(sys1_cert)
    tau2, tau5 = select_tau25(model, pert, sys1_cert.P, triple)
    base = check_qmi(sys1_cert.P, model, (triple[0], 0, triple[1], triple[2], 0), pert)
    full = check_qmi(sys1_cert.P, model, (triple[0], tau2, triple[1], triple[2], tau5), pert)
    assert full.lambda_max <= base.lambda_max / 2 + 1e-15
    # ||N~^dag N~|| = kappa = 10 and ||E~^dag E~|| = 1 for SYS1
    eta = -base.lambda_max
    assert tau2**2 == pytest.approx(eta / 20, rel=1e-12)
    assert tau5**2 == pytest.approx(eta * pert.gamma**2 / 2, rel=1e-12)


def test_optimize_c3_policy_does_not_worsen(sys1_cert):
    model = sys1_model()
    cert = certify(model, sys1_pert(), scalings=pinned(sys1_cert), tau_policy="optimize-c3")
    assert cert.c3 <= sys1_cert.c3
    assert verify_certificate(model, sys1_pert(), cert).ok


def test_unknown_policy_rejected(sys1_cert):
    with pytest.raises(ValueError):
        select_tau25(sys1_model(), sys1_pert(), sys1_cert.P, pinned(sys1_cert), policy="nope")


def test_tampered_certificates_fail(sys1, sys1_cert):
    doubled = dataclasses.replace(sys1_cert, c2=2 * sys1_cert.c2)
    report = verify_certificate(*sys1, doubled)
    assert not report.ok
    assert "c2_supported" in report.failures()

    indefinite = dataclasses.replace(sys1_cert, P=np.diag([1.0, -1.0]))
    assert "P_positive_definite" in verify_certificate(*sys1, indefinite).failures()

    loose_c3 = dataclasses.replace(sys1_cert, c3=0.5 * sys1_cert.c3)
    assert "c3_valid" in verify_certificate(*sys1, loose_c3).failures()


def test_dimension_mismatch_raises(sys1, sys1_cert):
    bad = dataclasses.replace(sys1_cert, P=np.eye(4))
    with pytest.raises(ValueError):
        verify_certificate(*sys1, bad)


def test_infeasible_reasons(sys1_cert):
    with pytest.raises(InfeasibleError) as err:
        certify(sys1_model(), sys1_pert(gamma=0.05), scalings=pinned(sys1_cert))
    assert err.value.reason == REASON_NO_SCALINGS

    undamped = QuantumLinearModel.from_blocks([[1]], [[0]], [[0]], [[0]], [[1]], [[0]])
    with pytest.raises(InfeasibleError) as err:
        certify(undamped, sys1_pert())
    assert err.value.reason == REASON_NON_HURWITZ


def test_bad_decay_fraction():
    with pytest.raises(ValueError):
        certify(sys1_model(), sys1_pert(), scalings=(1, 1, 1), decay_fraction=0.0)


def test_certificate_bounds_helpers(sys1_cert):
    t = np.array([0.0, 1.0])
    np.testing.assert_allclose(sys1_cert.number_bound(t, 2.0)[0], sys1_cert.c1 * 2 + sys1_cert.c3)
    assert sys1_cert.lyapunov_bound(1e9, 1.0) == pytest.approx(sys1_cert.lam / sys1_cert.c)


def test_estimator_api(sys1_cert):
    est = RobustStabilityCertifier(margin=1e-3)
    assert est.get_params()["tau_policy"] == "default"
    with pytest.raises(NotFittedError):
        est.predict_bound(0.0, 1.0)
    est.fit(sys1_model(), sys1_pert(), scalings=pinned(sys1_cert))
    assert est.feasible_ and est.reason_ == ""
    assert est.decay_rate() == pytest.approx(sys1_cert.c2)
    assert est.predict_bound(0.0, 1.0) == pytest.approx(est.certificate_.c1 + est.certificate_.c3)
    assert est.verify().ok

    bad = RobustStabilityCertifier().set_params(margin=1e-3)
    bad.fit(sys1_model(), PerturbationSpec(gamma=0.05, delta2=0.01), scalings=pinned(sys1_cert))
    assert not bad.feasible_ and bad.reason_ == REASON_NO_SCALINGS
    with pytest.raises(InfeasibleError):
        bad.predict_bound(0.0, 1.0)
