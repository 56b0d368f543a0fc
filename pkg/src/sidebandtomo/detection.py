"""Forward models for spectral homodyne and resonator detection.

Resonator detection photocurrents
---------------------------------
With sideband factors ``R_up = x_u + i y_u`` and ``R_low = x_l + i y_l`` the
cosine and sine photocurrent components are the linear forms

    J_cos = c . (p_up, q_up, p_low, q_low) + J_u,   c = ( x_u, y_u,  x_l,  y_l)
    J_sin = s . (p_up, q_up, p_low, q_low) + J_v,   s = (-y_u, x_u,  y_l, -x_l)

``J_u`` and ``J_v`` are independent vacuum terms from the cavity loss port.
Their variance is fixed by requiring a vacuum input to give
``var(J_cos) = var(J_sin) = 2``, i.e. ``var(J_u) = var(J_v) = 2 - g_plus``.

Noise power expansion
---------------------
The phase-averaged noise power in shot-noise units is
``S = (var J_cos + var J_sin) / 4``.  Expanding the quadratic forms gives

    |R_up|^2 (V11 + V22) + |R_low|^2 (V33 + V44)
        + 2 Re(R_up R_low) (V13 - V24) + 2 Im(R_up R_low) (V14 + V23)

for ``c'Vc + s'Vs``.  With ``V11 + V22 = 2 E_up + 2`` (same for the lower
mode), ``A - B = 2 (V13 - V24)`` and ``C = V14 + V23`` this becomes

    S = 1 + [g_plus (E_up + E_low) + g_minus (E_up - E_low)
             + 2 g_r (A - B) + 4 g_i C] / 4

with ``g_plus/minus = |R_up|^2 +- |R_low|^2`` and ``g_r + i g_i = R_up R_low / 2``.
:func:`rd_power_design` returns exactly these four weights.  Far from
resonance ``R -> 1`` and ``S -> A/2``, the homodyne value at zero LO phase.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .cavity import CavityParams, g_functions, sideband_factors
from .state import TwoModeState, as_sideband, hd_coefficients, require_physical


class ScanKind(enum.Enum):
    HOMODYNE_PHASE = "HomodynePhase"
    RESONATOR_DETUNING = "ResonatorDetuning"


@dataclass(frozen=True)
class NoiseModel:
    """Finite-sample estimation noise: ``samples_per_point`` draws per grid point.

    ``stream`` separates independent noise realizations under one seed.
    """

    samples_per_point: int
    seed: int
    stream: int = 0

    def __post_init__(self):
        if int(self.samples_per_point) < 2:
            raise ValueError("samples_per_point must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if int(self.stream) < 0:
            raise ValueError("stream must be non-negative")

    def generators(self, n: int) -> list[np.random.Generator]:
        """One independent stream per grid point, fixed by the seed alone."""
        root = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        children = root.spawn(n)
        return [np.random.default_rng(c) for c in children]


@dataclass(frozen=True)
class ScanCurve:
    abscissa: np.ndarray
    values: np.ndarray
    sigma: np.ndarray
    kind: ScanKind

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, ScanKind) else ScanKind(self.kind)
        object.__setattr__(self, "kind", kind)
        arrays = []
        for name in ("abscissa", "values", "sigma"):
            a = np.array(getattr(self, name), dtype=float).reshape(-1)
            a.flags.writeable = False
            object.__setattr__(self, name, a)
            arrays.append(a)
        if not len(arrays[0]) == len(arrays[1]) == len(arrays[2]):
            raise ValueError("abscissa, values and sigma must have equal length")
        if len(arrays[0]) < 4:
            raise ValueError("a scan needs at least 4 points")
        if np.any(arrays[2] < 0):
            raise ValueError("sigma must be non-negative")

    def __len__(self):
        return len(self.abscissa)

    def __eq__(self, other):
        if not isinstance(other, ScanCurve):
            return NotImplemented
        return self.kind is other.kind and all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in ("abscissa", "values", "sigma")
        )

    __hash__ = None


class PhotocurrentMoments(NamedTuple):
    mean_cos: float
    mean_sin: float
    var_cos: float
    var_sin: float
    cov_cossin: float


MOMENT_FIELDS = PhotocurrentMoments._fields


@dataclass(frozen=True)
class LockedScan(Sequence):
    """Phase-locked resonator scan: photocurrent moments per detuning.

    ``values`` and ``sigma`` are ``(n, 5)`` arrays with columns in
    :data:`MOMENT_FIELDS` order; iterating yields :class:`PhotocurrentMoments`.
    """

    detuning: np.ndarray
    values: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        D = np.array(self.detuning, dtype=float).reshape(-1)
        vals = np.array(self.values, dtype=float).reshape(len(D), 5)
        sig = np.array(self.sigma, dtype=float).reshape(len(D), 5)
        for a in (D, vals, sig):
            a.flags.writeable = False
        object.__setattr__(self, "detuning", D)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "sigma", sig)

    def __len__(self):
        return len(self.detuning)

    def __getitem__(self, i):
        return PhotocurrentMoments(*map(float, self.values[i]))

    def __eq__(self, other):
        if not isinstance(other, LockedScan):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in ("detuning", "values", "sigma"))

    __hash__ = None


# -- homodyne -----------------------------------------------------------------


def s_hd(state: TwoModeState, phi, visibility: float = 1.0):
    """Homodyne noise power at LO phase ``phi`` in shot-noise units.

    Only the three coefficients of :func:`hd_coefficients` enter.  Imperfect
    fringe visibility ``v`` mixes toward shot noise: ``1 + v**2 (S - 1)``.
    """
    if not 0.0 < visibility <= 1.0:
        raise ValueError(f"visibility must lie in (0, 1], got {visibility}")
    require_physical(state)
    A, B, C = hd_coefficients(state)
    phi = np.asarray(phi, dtype=float)
    ideal = 0.5 * np.cos(phi) ** 2 * A + 0.5 * np.sin(phi) ** 2 * B + 0.5 * np.sin(2 * phi) * C
    out = 1.0 + visibility**2 * (ideal - 1.0)
    return out if out.ndim else float(out)


def add_estimation_noise(value: float, N: int, rng: np.random.Generator) -> tuple[float, float]:
    """Perturb a noise-power value as a variance estimated from ``N`` samples.

    Gaussian approximation of the scaled chi-square law with
    ``sigma = value * sqrt(2 / (N - 1))``.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if not value > 0:
        raise ValueError(f"noise power must be positive, got {value}")
    sigma = value * np.sqrt(2.0 / (N - 1))
    return float(value + sigma * rng.standard_normal()), float(sigma)


def _noisy(values: np.ndarray, noise: NoiseModel, workers: int):
    gens = noise.generators(len(values))
    N = int(noise.samples_per_point)

    def one(i):
        return add_estimation_noise(float(values[i]), N, gens[i])

    idx = range(len(values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, idx))
    else:
        pairs = [one(i) for i in idx]
    pairs = np.array(pairs, dtype=float).reshape(len(values), 2)
    return pairs[:, 0], pairs[:, 1]


def hd_scan(
    state: TwoModeState,
    phi_grid,
    visibility: float = 1.0,
    noise: NoiseModel | None = None,
    workers: int = 1,
) -> ScanCurve:
    phi = np.asarray(phi_grid, dtype=float).reshape(-1)
    if phi.size == 0:
        raise ValueError("phase grid is empty")
    values = np.asarray(s_hd(state, phi, visibility), dtype=float).reshape(-1)
    sigma = np.zeros_like(values)
    if noise is not None:
        values, sigma = _noisy(values, noise, workers)
    return ScanCurve(phi, values, sigma, ScanKind.HOMODYNE_PHASE)


# -- resonator detection -------------------------------------------------------


def rd_vectors(cavity: CavityParams, detuning, omega_over_gamma: float):
    """Coefficient vectors ``c``, ``s`` (each ``(n, 4)``) and ``g_plus`` per detuning."""
    r_up, r_low = sideband_factors(cavity, detuning, omega_over_gamma)
    xu, yu, xl, yl = r_up.real, r_up.imag, r_low.real, r_low.imag
    c = np.stack([xu, yu, xl, yl], axis=-1)
    s = np.stack([-yu, xu, yl, -xl], axis=-1)
    g_plus = np.abs(r_up) ** 2 + np.abs(r_low) ** 2
    return c, s, g_plus


def rd_power_design(cavity: CavityParams, detuning, omega_over_gamma: float) -> np.ndarray:
    """Weights of (energy sum, energy imbalance, A - B, C) in ``S_rd - 1``."""
    r_up, r_low = sideband_factors(cavity, detuning, omega_over_gamma)
    gp, gm, gr, gi = g_functions(r_up, r_low)
    return np.stack([gp / 4, gm / 4, gr / 2, gi], axis=-1)


def _moment_arrays(state: TwoModeState, cavity, detuning, omega_over_gamma):
    state = as_sideband(state)
    require_physical(state)
    c, s, g_plus = rd_vectors(cavity, detuning, omega_over_gamma)
    V, mu = state.cov, state.mean
    vacuum_port = 2.0 - g_plus
    return np.stack(
        [
            c @ mu,
            s @ mu,
            np.einsum("ni,ij,nj->n", c, V, c) + vacuum_port,
            np.einsum("ni,ij,nj->n", s, V, s) + vacuum_port,
            np.einsum("ni,ij,nj->n", c, V, s),
        ],
        axis=-1,
    )


def rd_moments(state: TwoModeState, cavity: CavityParams, detuning: float, omega_over_gamma: float) -> PhotocurrentMoments:
    """First and second moments of ``(J_cos, J_sin)`` at one detuning."""
    row = _moment_arrays(state, cavity, [float(detuning)], omega_over_gamma)[0]
    return PhotocurrentMoments(*map(float, row))


def s_rd(state: TwoModeState, cavity: CavityParams, detuning, omega_over_gamma: float):
    """Phase-averaged resonator noise power, shot-noise units (vacuum gives 1)."""
    D = np.asarray(detuning, dtype=float)
    m = _moment_arrays(state, cavity, D.reshape(-1), omega_over_gamma)
    out = ((m[:, 2] + m[:, 3]) / 4).reshape(D.shape)
    return out if out.ndim else float(out)


def rd_scan(
    state: TwoModeState,
    cavity: CavityParams,
    detuning_grid,
    omega_over_gamma: float,
    noise: NoiseModel | None = None,
    workers: int = 1,
) -> ScanCurve:
    D = np.asarray(detuning_grid, dtype=float).reshape(-1)
    if D.size == 0:
        raise ValueError("detuning grid is empty")
    values = np.asarray(s_rd(state, cavity, D, omega_over_gamma), dtype=float)
    sigma = np.zeros_like(values)
    if noise is not None:
        values, sigma = _noisy(values, noise, workers)
    return ScanCurve(D, values, sigma, ScanKind.RESONATOR_DETUNING)


def _sample_moments(row: np.ndarray, N: int, rng: np.random.Generator):
    mean = row[:2]
    cov = np.array([[row[2], row[4]], [row[4], row[3]]])
    L = np.linalg.cholesky(cov)
    x = mean + rng.standard_normal((N, 2)) @ L.T
    m = x.mean(axis=0)
    S = np.cov(x, rowvar=False, ddof=1)
    est = np.array([m[0], m[1], S[0, 0], S[1, 1], S[0, 1]])
    sig = np.array(
        [
            np.sqrt(S[0, 0] / N),
            np.sqrt(S[1, 1] / N),
            S[0, 0] * np.sqrt(2.0 / (N - 1)),
            S[1, 1] * np.sqrt(2.0 / (N - 1)),
            np.sqrt((S[0, 0] * S[1, 1] + S[0, 1] ** 2) / (N - 1)),
        ]
    )
    return est, sig


def rd_locked_scan(
    state: TwoModeState,
    cavity: CavityParams,
    detuning_grid,
    omega_over_gamma: float,
    noise: NoiseModel | None = None,
    workers: int = 1,
) -> LockedScan:
    """Phase-locked acquisition: full ``(J_cos, J_sin)`` moments per detuning.

    With a noise model, each point is estimated from ``N`` Gaussian
    photocurrent samples (sample mean and ``ddof=1`` covariance).
    """
    D = np.asarray(detuning_grid, dtype=float).reshape(-1)
    if D.size == 0:
        raise ValueError("detuning grid is empty")
    exact = _moment_arrays(state, cavity, D, omega_over_gamma)
    if noise is None:
        return LockedScan(D, exact, np.zeros_like(exact))
    gens = noise.generators(len(D))
    N = int(noise.samples_per_point)

    def one(i):
        return _sample_moments(exact[i], N, gens[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(D))))
    else:
        results = [one(i) for i in range(len(D))]
    values = np.array([r[0] for r in results])
    sigma = np.array([r[1] for r in results])
    return LockedScan(D, values, sigma)
