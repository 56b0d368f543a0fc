import numpy as np
import pytest
from hypothesis import strategies as hst
from scipy.linalg import expm

from sidebandtomo.cavity import CavityParams
from sidebandtomo.state import SYMPLECTIC_FORM, TwoModeState

BENCH_OMEGA_MHZ = 17.0
BENCH_GAMMA_MHZ = 6.0
BENCH_W = BENCH_OMEGA_MHZ / BENCH_GAMMA_MHZ


def random_symplectic(rng, scale=0.5):
    H = rng.normal(scale=scale, size=(4, 4))
    return expm(SYMPLECTIC_FORM @ (H + H.T) / 2)


def random_physical_state(rng, scale=0.5, max_thermal=3.0, displace=True):
    """Williamson form: S diag(nu1, nu1, nu2, nu2) S^T with nu >= 1."""
    S = random_symplectic(rng, scale)
    nu = 1 + rng.uniform(0, max_thermal, size=2)
    D = np.diag(np.repeat(nu, 2))
    V = S @ D @ S.T
    V = (V + V.T) / 2
    mean = rng.normal(scale=3.0, size=4) if displace else np.zeros(4)
    return TwoModeState(mean, V)


def random_cavity(rng):
    return CavityParams(
        r0_intensity=float(rng.uniform(0, 0.9)),
        bandwidth_mhz=float(rng.uniform(1, 20)),
        coupling=rng.choice(["over", "under"]),
        mode_matching_eta=float(rng.uniform(0.5, 1.0)),
    )


@hst.composite
def physical_states(draw):
    seed = draw(hst.integers(0, 2**32 - 1))
    return random_physical_state(np.random.default_rng(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bench_cavity():
    return CavityParams(0.04, BENCH_GAMMA_MHZ, "over", 0.935)
