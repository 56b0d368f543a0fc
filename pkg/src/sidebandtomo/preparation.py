"""State preparation pipeline: displace -> attenuate -> randomize.

An electro-optic modulator puts conjugate coherent amplitudes ``beta`` and
``beta*`` on the upper and lower sidebands.  An asymmetry cavity then scales
the lower sideband amplitude by ``kappa``.  Driving the modulator with
Gaussian noise turns the displacement into classical noise with weight
``exp(-|beta|^2 / |beta0|^2)``, i.e. ``var(Re beta) = var(Im beta) = |beta0|^2 / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cavity import CavityParams, kappa_from_cavity
from .state import ModeIndex, TwoModeState, as_sideband, displace, require_physical, vacuum


@dataclass(frozen=True)
class PreparationParams:
    beta: complex = 0j
    kappa: float = 1.0
    beta0_sq: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta", complex(self.beta))
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")
        if not self.beta0_sq >= 0.0:
            raise ValueError(f"beta0_sq must be >= 0, got {self.beta0_sq}")


def prepare_psi1(beta: complex) -> TwoModeState:
    beta = complex(beta)
    return displace(vacuum(), beta, beta.conjugate())


def attenuate_mode(state: TwoModeState, mode: ModeIndex, kappa: float) -> TwoModeState:
    """Pure-loss channel with amplitude transmission ``kappa`` on one mode."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    state = as_sideband(state)
    require_physical(state, "attenuation input")
    k = np.ones(4)
    k[ModeIndex.parse(mode).slice] = kappa
    added = 1.0 - (k**2)
    return TwoModeState(k * state.mean, np.outer(k, k) * state.cov + np.diag(added))


def prepare_psi2(beta: complex, kappa: float) -> TwoModeState:
    return attenuate_mode(prepare_psi1(beta), ModeIndex.LOWER, kappa)


def displacement_map(kappa: float) -> np.ndarray:
    """4x2 map from ``(Re beta, Im beta)`` to the mean vector of psi2."""
    return 2.0 * np.array([[1.0, 0.0], [0.0, 1.0], [kappa, 0.0], [0.0, -kappa]])


def randomize_displacement(kappa: float, beta0_sq: float) -> TwoModeState:
    """Gaussian mixture of psi2 states over ``beta``.

    The mean vanishes and the covariance is ``I + L (|beta0|^2/2) L^T``.
    """
    if not beta0_sq >= 0.0:
        raise ValueError(f"beta0_sq must be >= 0, got {beta0_sq}")
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    L = displacement_map(kappa)
    return TwoModeState(np.zeros(4), np.eye(4) + 0.5 * beta0_sq * L @ L.T)


def prepare_rho(params: PreparationParams) -> TwoModeState:
    """Benchmark state with sideband energy imbalance ``kappa**2``."""
    return randomize_displacement(params.kappa, params.beta0_sq)


def prepare_rho_r(beta0_sq: float) -> TwoModeState:
    """Balanced thermal reference state."""
    return randomize_displacement(1.0, beta0_sq)


def prepare(params: PreparationParams) -> TwoModeState:
    """The state a run config describes: rho if noise-driven, else psi2."""
    if params.beta0_sq > 0:
        return prepare_rho(params)
    return prepare_psi2(params.beta, params.kappa)


def kappa_for_ratio(ratio: float) -> float:
    """Attenuation giving ``E_low / E_up = ratio`` after randomization."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("energy ratio must lie in [0, 1]")
    return float(np.sqrt(ratio))


def kappa_from_asymmetry_cavity(params: CavityParams) -> float:
    """Lower-sideband attenuation of an asymmetry cavity locked on that sideband."""
    return kappa_from_cavity(params, 0.0)
