import numpy as np
import pytest

import hitchinlab as hl
from hitchinlab import limits


@pytest.fixture(scope="session")
def regular():
    return hl.fuchsian_octagon(label="reg")


@pytest.fixture(scope="session")
def stretched():
    return hl.fuchsian_octagon(5.2, label="st52")


@pytest.fixture(scope="session")
def regular4(regular):
    return hl.sym_power(regular, 4)


@pytest.fixture(scope="session")
def stretched4(stretched):
    return hl.sym_power(stretched, 4)


@pytest.fixture(scope="session")
def atlas4(regular):
    return limits.boundary_atlas(regular, 4)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240809)


def random_loxodromic(rng, n, min_gap=0.3, shear=0.3):
    """Random loxodromic matrix with controlled gaps and eigenbasis condition."""
    gaps = min_gap + rng.uniform(0.0, 1.0, size=n - 1)
    lam = np.concatenate([[0.0], -np.cumsum(gaps)])
    lam -= lam.mean()
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V = q + shear * rng.standard_normal((n, n)) / np.sqrt(n)
    return (V * np.exp(lam)) @ np.linalg.inv(V)
