import math
from pathlib import Path

import numpy as np
import pytest

from qlscert.certifier import certify
from qlscert.model import PerturbationSpec, QuantumLinearModel, doubled

MODELS = Path(__file__).resolve().parents[1] / "models"

KAPPA = 10.0
SYS1_POLY = (0.0, 0.05, 0.01)


def sys1_model(kappa=KAPPA):
    return QuantumLinearModel.from_blocks(
        [[0]], [[0]], [[math.sqrt(kappa)]], [[0]], [[1]], [[0]]
    )


def sys1_pert(**changes):
    base = PerturbationSpec(gamma=10.0, delta1=0.1, delta2=0.01, delta3=0.1, poly=SYS1_POLY)
    return base.with_(**changes) if changes else base


def random_model(rng, n, scale=1.0):
    def r(*shape):
        return scale * (rng.normal(size=shape) + 1j * rng.normal(size=shape))

    M1 = r(n, n)
    M2 = r(n, n)
    return QuantumLinearModel.from_blocks(
        M1 + M1.conj().T, M2 + M2.T, r(1, n), r(1, n), r(1, n), r(1, n)
    )


def random_structured_P(rng, n):
    """Positive definite ``P`` of doubled-up form."""
    while True:
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        P1 = A @ A.conj().T + n * np.eye(n)
        S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        P = doubled(P1, 0.5 * (S + S.T))
        if np.linalg.eigvalsh(P).min() > 1e-3:
            return P


@pytest.fixture(scope="session")
def sys1():
    return sys1_model(), sys1_pert()


@pytest.fixture(scope="session")
def sys1_cert(sys1):
    return certify(*sys1)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture(scope="session")
def models_dir():
    return MODELS
