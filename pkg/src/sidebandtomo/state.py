"""Two-mode Gaussian states of the sideband pair.

Quadratures are ordered ``(p_up, q_up, p_low, q_low)`` where "up" is the
sideband at ``w0 + W`` and "low" the one at ``w0 - W``.  The vacuum has unit
variance in every quadrature (``a = (p + i q) / 2``), so all noise figures
are in shot-noise units.

The symmetric/antisymmetric basis uses ``p_pm = (p_up +- p_low) / sqrt(2)``
(same for ``q``) and is ordered ``(p_+, q_+, p_-, q_-)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NonPhysicalStateError

PHYSICALITY_TOL = 1e-9

SIDEBAND = "sideband"
PLUSMINUS = "plusminus"

# per-mode block [[0, 1], [-1, 0]]
SYMPLECTIC_FORM = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))

# sideband -> plus/minus; symmetric and orthogonal, hence its own inverse
PLUS_MINUS_MATRIX = np.array(
    [
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, -1.0],
    ]
) / np.sqrt(2.0)


class ModeIndex(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"

    @property
    def slice(self) -> slice:
        return slice(0, 2) if self is ModeIndex.UPPER else slice(2, 4)

    @classmethod
    def parse(cls, value) -> "ModeIndex":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown mode {value!r}, expected 'upper' or 'lower'") from None


@dataclass(frozen=True)
class TwoModeState:
    """Mean vector and covariance matrix of the two sideband modes.

    Arrays are copied and made read-only on construction.
    """

    mean: np.ndarray
    cov: np.ndarray
    basis: str = SIDEBAND

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.shape != (4,):
            raise ValueError(f"mean must have 4 entries, got shape {mean.shape}")
        if cov.shape != (4, 4):
            raise ValueError(f"cov must be 4x4, got shape {cov.shape}")
        if self.basis not in (SIDEBAND, PLUSMINUS):
            raise ValueError(f"unknown basis {self.basis!r}")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def __eq__(self, other):
        if not isinstance(other, TwoModeState):
            return NotImplemented
        return (
            self.basis == other.basis
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.cov, other.cov)
        )

    __hash__ = None

    def allclose(self, other: "TwoModeState", atol: float = 1e-12) -> bool:
        other = _in_basis(other, self.basis)
        return np.allclose(self.mean, other.mean, atol=atol, rtol=0) and np.allclose(
            self.cov, other.cov, atol=atol, rtol=0
        )


class HDCoefficients(NamedTuple):
    """The three state coefficients a phase-scanned homodyne detector sees.

    ``A = var(p_+) + var(q_-)``, ``B = var(p_-) + var(q_+)``,
    ``C = cov(p_+, q_+) - cov(p_-, q_-)``.
    """

    A: float
    B: float
    C: float


class EnergySummary(NamedTuple):
    e_upper: float
    e_lower: float
    sum: float
    imbalance: float

    @property
    def ratio(self) -> float:
        """``e_lower / e_upper`` (nan when the upper mode is at vacuum)."""
        if self.e_upper == 0:
            return float("nan")
        return self.e_lower / self.e_upper


class Physicality(NamedTuple):
    passed: bool
    margin: float


def vacuum() -> TwoModeState:
    return TwoModeState(np.zeros(4), np.eye(4))


def _in_basis(state: TwoModeState, basis: str) -> TwoModeState:
    if state.basis == basis:
        return state
    T = PLUS_MINUS_MATRIX
    return TwoModeState(T @ state.mean, T @ state.cov @ T.T, basis)


def as_sideband(state: TwoModeState) -> TwoModeState:
    return _in_basis(state, SIDEBAND)


def to_plus_minus(state: TwoModeState) -> TwoModeState:
    """Express ``state`` in the symmetric/antisymmetric basis."""
    return _in_basis(state, PLUSMINUS)


def from_plus_minus(state: TwoModeState) -> TwoModeState:
    return _in_basis(state, SIDEBAND)


def displace(state: TwoModeState, beta_upper: complex, beta_lower: complex) -> TwoModeState:
    """Shift the means by coherent amplitudes (``<p> = 2 Re b``, ``<q> = 2 Im b``)."""
    state = as_sideband(state)
    bu, bl = complex(beta_upper), complex(beta_lower)
    if not all(np.isfinite([bu.real, bu.imag, bl.real, bl.imag])):
        raise ValueError("displacement amplitudes must be finite")
    shift = 2.0 * np.array([bu.real, bu.imag, bl.real, bl.imag])
    return TwoModeState(state.mean + shift, state.cov)


def physicality_check(state: TwoModeState, tol: float = PHYSICALITY_TOL) -> Physicality:
    """Smallest eigenvalue of ``cov + i*Sigma``; passes when it is >= -tol.

    Raises ``ValueError`` for a non-symmetric covariance.
    """
    cov = np.asarray(state.cov)
    scale = max(1.0, float(np.max(np.abs(cov))))
    if not np.allclose(cov, cov.T, atol=1e-12 * scale, rtol=0):
        raise ValueError("covariance matrix is not symmetric")
    # the basis change is orthogonal and symplectic, so either basis works
    margin = float(np.linalg.eigvalsh(cov + 1j * SYMPLECTIC_FORM)[0])
    return Physicality(margin >= -tol, margin)


def require_physical(state: TwoModeState, what: str = "state") -> None:
    check = physicality_check(state)
    if not check.passed:
        raise NonPhysicalStateError(
            f"{what} violates the uncertainty principle "
            f"(min eigenvalue of cov + i*Sigma = {check.margin:.3e})"
        )


def mode_energy(state: TwoModeState, mode: ModeIndex) -> float:
    """Fluctuation energy ``(var p + var q)/2 - 1`` of one sideband."""
    cov = as_sideband(state).cov
    s = ModeIndex.parse(mode).slice
    return 0.5 * float(np.trace(cov[s, s])) - 1.0


def energy_summary(state: TwoModeState) -> EnergySummary:
    eu = mode_energy(state, ModeIndex.UPPER)
    el = mode_energy(state, ModeIndex.LOWER)
    return EnergySummary(eu, el, eu + el, eu - el)


def hd_coefficients(state: TwoModeState) -> HDCoefficients:
    w = to_plus_minus(state).cov
    return HDCoefficients(
        A=float(w[0, 0] + w[3, 3]),
        B=float(w[2, 2] + w[1, 1]),
        C=float(w[0, 1] - w[2, 3]),
    )


def canonical_hd_state(coeffs: HDCoefficients) -> TwoModeState:
    """Balanced state carrying exactly the given homodyne coefficients.

    In the plus/minus basis the two modes get the blocks
    ``[[A, C], [C, B]] / 2`` and ``[[B, -C], [-C, A]] / 2``; both sidebands
    then hold the same energy.  Coefficients that no physical state can
    produce (``A*B - C**2 < 4`` or ``A <= 0``) are rejected.
    """
    A, B, C = (float(x) for x in coeffs)
    w = np.zeros((4, 4))
    w[0, 0] = w[3, 3] = A / 2
    w[1, 1] = w[2, 2] = B / 2
    w[0, 1] = w[1, 0] = C / 2
    w[2, 3] = w[3, 2] = -C / 2
    out = from_plus_minus(TwoModeState(np.zeros(4), w, PLUSMINUS))
    check = physicality_check(out)
    if not check.passed:
        raise NonPhysicalStateError(
            f"no physical state has HD coefficients A={A:g}, B={B:g}, C={C:g} "
            f"(A*B - C^2 = {A * B - C * C:g}, needs >= 4)"
        )
    return out


def purity(state: TwoModeState) -> float:
    """``1/sqrt(det cov)``; equals 1 only for pure states."""
    det = float(np.linalg.det(state.cov))
    if det <= 0 or not np.isfinite(det):
        raise NonPhysicalStateError(f"covariance is singular or indefinite (det = {det:g})")
    return 1.0 / np.sqrt(det)


class Marginal(NamedTuple):
    mean: np.ndarray
    cov: np.ndarray


def single_mode_marginal(state: TwoModeState, mode: ModeIndex) -> Marginal:
    state = as_sideband(state)
    s = ModeIndex.parse(mode).slice
    return Marginal(state.mean[s].copy(), state.cov[s, s].copy())


def wigner_eval(marginal: Marginal, grid) -> np.ndarray:
    """Gaussian Wigner function of a single-mode marginal.

    Parameters
    ----------
    marginal : Marginal
        Mean 2-vector and 2x2 covariance.
    grid : tuple of array_like
        ``(p, q)`` coordinates; broadcast against each other.

    Returns
    -------
    ndarray
        ``W(p, q)``, normalized to unit integral.
    """
    mean, cov = np.asarray(marginal[0], float), np.asarray(marginal[1], float)
    det = float(np.linalg.det(cov))
    if det <= 0:
        raise NonPhysicalStateError(f"marginal covariance is singular (det = {det:g})")
    p, q = np.broadcast_arrays(*(np.asarray(g, float) for g in grid))
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise ValueError("Wigner grid must be finite")
    inv = np.linalg.inv(cov)
    dp, dq = p - mean[0], q - mean[1]
    quad = inv[0, 0] * dp**2 + 2 * inv[0, 1] * dp * dq + inv[1, 1] * dq**2
    return np.exp(-0.5 * quad) / (2 * np.pi * np.sqrt(det))
