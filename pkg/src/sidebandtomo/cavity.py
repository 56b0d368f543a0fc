"""Optical resonator response and the channel it applies to the sidebands.

Line shape is the single-pole one-port model

    r(D) = (d + i D) / (1 + i D),    d = -sqrt(R0) (over) or +sqrt(R0) (under)

with ``D`` in units of the cavity half-linewidth ``gamma``.  Imperfect mode
matching is a coherent bypass, ``r_eff = (1 - eta) + eta * r``.

Scan detuning convention: ``D`` is the offset of the cavity resonance from
the carrier, ``(w_c - w0) / gamma``.  The upper sideband ``w0 + W`` is
therefore resonant at ``D = +W/gamma`` and the lower one at ``D = -W/gamma``.
Referenced to the reflected carrier phase the sideband factors are

    R_up  = r(D) / |r(D)| * conj(r(D - W/gamma))
    R_low = r(D) / |r(D)| * conj(r(D + W/gamma))
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CarrierExtinguishedError
from .state import TwoModeState, as_sideband, require_physical

CARRIER_TOL = 1e-12


class Coupling(enum.Enum):
    OVERCOUPLED = "over"
    UNDERCOUPLED = "under"

    @property
    def sign(self) -> float:
        return -1.0 if self is Coupling.OVERCOUPLED else 1.0


@dataclass(frozen=True)
class CavityParams:
    r0_intensity: float = 0.0
    bandwidth_mhz: float = 1.0
    coupling: Coupling = Coupling.OVERCOUPLED
    mode_matching_eta: float = 1.0

    def __post_init__(self):
        coupling = self.coupling
        if not isinstance(coupling, Coupling):
            try:
                coupling = Coupling(str(coupling).lower())
            except ValueError:
                raise ValueError(f"coupling must be 'over' or 'under', got {self.coupling!r}") from None
            object.__setattr__(self, "coupling", coupling)
        if not 0.0 <= self.r0_intensity <= 1.0:
            raise ValueError(f"r0_intensity must lie in [0, 1], got {self.r0_intensity}")
        if not self.bandwidth_mhz > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth_mhz}")
        if not 0.0 < self.mode_matching_eta <= 1.0:
            raise ValueError(f"mode matching must lie in (0, 1], got {self.mode_matching_eta}")

    @property
    def d(self) -> float:
        """Signed amplitude reflection on resonance."""
        return self.coupling.sign * np.sqrt(self.r0_intensity)


class SidebandResponse(NamedTuple):
    r_upper: complex
    r_lower: complex
    g_plus: float
    g_minus: float
    g_r: float
    g_i: float


def reflection(params: CavityParams, detuning):
    """Bare complex amplitude reflection ``r(D)``; vectorized over ``detuning``."""
    D = np.asarray(detuning, dtype=float)
    out = (params.d + 1j * D) / (1.0 + 1j * D)
    return out if out.ndim else complex(out)


def transmission(params: CavityParams, detuning):
    """Loss-port amplitude ``sqrt(1 - |r|^2)``."""
    t = np.sqrt(np.clip(1.0 - np.abs(reflection(params, detuning)) ** 2, 0.0, None))
    return t if np.ndim(t) else float(t)


def effective_reflection(params: CavityParams, detuning):
    eta = params.mode_matching_eta
    r = reflection(params, detuning)
    if eta == 1.0:
        return r
    return (1.0 - eta) + eta * r


def sideband_factors(params: CavityParams, detuning, omega_over_gamma: float):
    """Vectorized ``(R_up, R_low)`` arrays for a detuning grid.

    Raises ``CarrierExtinguishedError`` if any grid point has ``|r_eff| < 1e-12``.
    """
    D = np.atleast_1d(np.asarray(detuning, dtype=float))
    carrier = np.atleast_1d(effective_reflection(params, D))
    mag = np.abs(carrier)
    bad = mag < CARRIER_TOL
    if np.any(bad):
        raise CarrierExtinguishedError(
            f"carrier extinguished at detuning {D[bad][0]:g}; exclude this point from the scan"
        )
    phase = carrier / mag
    w = float(omega_over_gamma)
    r_up = phase * np.conj(effective_reflection(params, D - w))
    r_low = phase * np.conj(effective_reflection(params, D + w))
    return r_up, r_low


def g_functions(r_up, r_low):
    """``(g_plus, g_minus, g_r, g_i)`` from the sideband factors."""
    pu, pl = np.abs(r_up) ** 2, np.abs(r_low) ** 2
    half = r_up * r_low / 2
    return pu + pl, pu - pl, np.real(half), np.imag(half)


def sideband_response(params: CavityParams, detuning: float, omega_over_gamma: float) -> SidebandResponse:
    r_up, r_low = sideband_factors(params, float(detuning), omega_over_gamma)
    gp, gm, gr, gi = g_functions(r_up[0], r_low[0])
    return SidebandResponse(complex(r_up[0]), complex(r_low[0]), float(gp), float(gm), float(gr), float(gi))


def valid_detunings(params: CavityParams, detuning) -> np.ndarray:
    """Drop grid points where the reflected carrier is extinguished."""
    D = np.asarray(detuning, dtype=float)
    return D[np.abs(effective_reflection(params, D)) >= CARRIER_TOL]


def _loss_rotation(c: complex) -> np.ndarray:
    # a -> c * a acting on (p, q)
    return np.array([[c.real, -c.imag], [c.imag, c.real]])


def apply_cavity_channel(
    state: TwoModeState, params: CavityParams, detuning: float, omega_over_gamma: float
) -> TwoModeState:
    """Sideband state after reflection, in the frame of the reflected carrier.

    Each sideband is multiplied by ``conj(R)`` of its factor and the lost
    fraction ``1 - |R|^2`` is refilled with vacuum.  Direct detection of the
    result at zero LO phase reproduces the resonator noise power.
    """
    state = as_sideband(state)
    require_physical(state, "cavity input")
    r_up, r_low = sideband_factors(params, float(detuning), omega_over_gamma)
    cu, cl = complex(np.conj(r_up[0])), complex(np.conj(r_low[0]))
    K = np.zeros((4, 4))
    K[:2, :2] = _loss_rotation(cu)
    K[2:, 2:] = _loss_rotation(cl)
    added = np.diag([1 - abs(cu) ** 2] * 2 + [1 - abs(cl) ** 2] * 2)
    return TwoModeState(K @ state.mean, K @ state.cov @ K.T + added)


def kappa_from_cavity(params: CavityParams, detuning: float = 0.0) -> float:
    """Amplitude attenuation a cavity imposes on a mode at ``detuning``."""
    return float(abs(effective_reflection(params, detuning)))
