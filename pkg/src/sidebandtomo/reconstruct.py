"""Least-squares inversion of scan data and identifiability analysis.

Every measurement model here is affine in the covariance matrix, so fits
are plain weighted linear least squares (weights ``1/sigma**2``, or none
when any ``sigma`` is zero).  Singular values below ``1e-10`` times the
largest count as zero when deciding rank.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cavity import CavityParams, valid_detunings
from .detection import LockedScan, ScanCurve, ScanKind, rd_power_design, rd_vectors
from .errors import IllConditionedWarning, NonPhysicalStateError, RankDeficiencyError
from .state import (
    SYMPLECTIC_FORM,
    EnergySummary,
    TwoModeState,
    energy_summary,
    physicality_check,
    purity,
)

RANK_TOL = 1e-10
COND_WARN = 1e6

QUADRATURES = ("p_up", "q_up", "p_low", "q_low")
COV_INDEX = [(i, j) for i in range(4) for j in range(i, 4)]
COV_NAMES = [f"{QUADRATURES[i]}*{QUADRATURES[j]}" for i, j in COV_INDEX]

HD_NAMES = ("A", "B", "C")
RD_POWER_NAMES = ("energy_sum", "energy_imbalance", "a_minus_b", "c")

VERDICT_SAME = "indistinguishable"
VERDICT_DIFFERENT = "distinguishable"
VERDICT_UNSURE = "inconclusive"


@dataclass
class FitReport:
    coefficients: dict
    coeff_covariance: np.ndarray
    residual_rms: float
    design_rank: int
    condition_number: float

    @property
    def names(self) -> list[str]:
        return list(self.coefficients)

    def stderr(self) -> dict:
        err = np.sqrt(np.clip(np.diag(self.coeff_covariance), 0, None))
        return dict(zip(self.coefficients, map(float, err)))


@dataclass
class ReconstructionResult:
    state: TwoModeState
    report: FitReport
    purity: float
    energies: EnergySummary
    projection_distance: float = 0.0


class IdentifiabilityReport(NamedTuple):
    technique: str
    rank: int
    null_space: np.ndarray
    singular_values: np.ndarray

    def null_matrices(self) -> list[np.ndarray]:
        """Null-space directions as Frobenius-normalized symmetric 4x4 matrices."""
        return [params_to_matrix(v, orthonormal=True) for v in self.null_space]


class Comparison(NamedTuple):
    chi2: float
    dof: int
    chi2_per_dof: float
    verdict: str


# -- parametrization of symmetric 4x4 matrices ------------------------------------


def params_to_matrix(theta, orthonormal: bool = False) -> np.ndarray:
    """Symmetric matrix from its 10 upper-triangle entries.

    With ``orthonormal=True`` off-diagonal coordinates are scaled by
    ``1/sqrt(2)`` so that the coordinate basis is Frobenius-orthonormal.
    """
    V = np.zeros((4, 4))
    for t, (i, j) in zip(theta, COV_INDEX):
        if i != j and orthonormal:
            t = t / np.sqrt(2.0)
        V[i, j] = V[j, i] = t
    return V


def matrix_to_params(V, orthonormal: bool = False) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    out = np.array([V[i, j] for i, j in COV_INDEX])
    if orthonormal:
        out = out * np.array([1.0 if i == j else np.sqrt(2.0) for i, j in COV_INDEX])
    return out


def quadratic_rows(a, b) -> np.ndarray:
    """Rows expressing ``a^T V b`` as a linear function of the 10 entries of ``V``."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    cols = []
    for i, j in COV_INDEX:
        if i == j:
            cols.append(a[:, i] * b[:, i])
        else:
            cols.append(a[:, i] * b[:, j] + a[:, j] * b[:, i])
    return np.stack(cols, axis=-1)


def _hd_vectors(phi):
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    cs, sn = np.cos(phi), np.sin(phi)
    c = np.stack([cs, sn, cs, sn], axis=-1)
    s = np.stack([-sn, cs, sn, -cs], axis=-1)
    return c, s


def hd_design(phi) -> np.ndarray:
    """Linear map from covariance entries to homodyne noise power per phase."""
    c, s = _hd_vectors(phi)
    return (quadratic_rows(c, c) + quadratic_rows(s, s)) / 4


def rd_power_cov_design(cavity: CavityParams, detuning, omega_over_gamma: float) -> np.ndarray:
    c, s, _ = rd_vectors(cavity, detuning, omega_over_gamma)
    return (quadratic_rows(c, c) + quadratic_rows(s, s)) / 4


def rd_locked_cov_design(cavity: CavityParams, detuning, omega_over_gamma: float):
    """Design and vacuum offsets for ``(var_cos, var_sin, cov_cossin)`` per point.

    Rows are interleaved point by point.
    """
    c, s, g_plus = rd_vectors(cavity, detuning, omega_over_gamma)
    n = len(g_plus)
    X = np.empty((3 * n, 10))
    X[0::3] = quadratic_rows(c, c)
    X[1::3] = quadratic_rows(s, s)
    X[2::3] = quadratic_rows(c, s)
    offset = np.zeros(3 * n)
    offset[0::3] = 2.0 - g_plus
    offset[1::3] = 2.0 - g_plus
    return X, offset


# -- least squares ---------------------------------------------------------------------


def _singular(Xw: np.ndarray):
    U, s, Vt = np.linalg.svd(Xw, full_matrices=True)
    if s.size == 0 or s[0] == 0:
        return 0, float("inf"), s, Vt
    rank = int(np.sum(s > RANK_TOL * s[0]))
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    return rank, cond, s, Vt


def weighted_lstsq(X, y, sigma, names, fixed: dict | None = None) -> FitReport:
    """Weighted linear least squares with rank and conditioning diagnostics.

    ``fixed`` pins named coefficients; their columns are moved to the data
    side and they are reported with zero variance.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    names = list(names)
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(names)
    if unknown:
        raise KeyError(f"cannot fix unknown coefficients {sorted(unknown)}")
    free = [k for k, n in enumerate(names) if n not in fixed]
    pinned = [k for k, n in enumerate(names) if n in fixed]
    y_free = y - X[:, pinned] @ np.array([fixed[names[k]] for k in pinned]) if pinned else y
    Xf = X[:, free]

    weighted = bool(np.all(sigma > 0))
    w = 1.0 / sigma if weighted else np.ones_like(y)
    Xw, yw = Xf * w[:, None], y_free * w
    rank, cond, s, Vt = _singular(Xw)
    if rank < len(free):
        null = Vt[rank:]
        raise RankDeficiencyError(
            f"design has rank {rank} < {len(free)} free coefficients; unresolved: "
            + "; ".join(_describe_direction(v, [names[k] for k in free]) for v in null),
            null_directions=null,
        )
    coef, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = y_free - Xf @ coef
    cov_free = np.linalg.inv(Xw.T @ Xw)
    if not weighted:
        dof = len(y) - len(free)
        cov_free = cov_free * (float(resid @ resid) / dof if dof > 0 else 0.0)

    full = np.zeros(len(names))
    full[free] = coef
    for k in pinned:
        full[k] = fixed[names[k]]
    cov = np.zeros((len(names), len(names)))
    cov[np.ix_(free, free)] = cov_free
    return FitReport(
        coefficients={n: float(v) for n, v in zip(names, full)},
        coeff_covariance=cov,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        design_rank=rank,
        condition_number=max(1.0, cond),
    )


def _describe_direction(v, names, cutoff=1e-6) -> str:
    terms = [f"{c:+.3g}*{n}" for c, n in zip(v, names) if abs(c) > cutoff]
    return " ".join(terms) if terms else "0"


# -- fits -----------------------------------------------------------------------------


def fit_hd_curve(curve: ScanCurve, visibility: float = 1.0) -> FitReport:
    """Recover ``(A, B, C)`` from a homodyne phase scan."""
    if curve.kind is not ScanKind.HOMODYNE_PHASE:
        raise ValueError(f"expected a homodyne phase scan, got {curve.kind.value}")
    phi = curve.abscissa
    v2 = visibility**2
    y = 1.0 + (curve.values - 1.0) / v2
    sigma = curve.sigma / v2
    X = np.stack([0.5 * np.cos(phi) ** 2, 0.5 * np.sin(phi) ** 2, 0.5 * np.sin(2 * phi)], axis=-1)
    report = weighted_lstsq(X, y, sigma, HD_NAMES)
    if np.ptp(np.mod(phi, np.pi)) <= np.pi / 2 and np.ptp(phi) <= np.pi / 2:
        warnings.warn("phase grid spans less than pi/2; coefficients poorly constrained", IllConditionedWarning)
    return report


def fit_rd_power_curve(
    curve: ScanCurve,
    cavity: CavityParams,
    omega_over_gamma: float,
    fixed: dict | None = None,
) -> FitReport:
    """Fit energy sum, energy imbalance, ``A - B`` and ``C`` to a detuning scan.

    ``fixed={"energy_imbalance": 0.0}`` gives the best curve a balanced
    (homodyne-like) state can produce.
    """
    if curve.kind is not ScanKind.RESONATOR_DETUNING:
        raise ValueError(f"expected a resonator detuning scan, got {curve.kind.value}")
    X = rd_power_design(cavity, curve.abscissa, omega_over_gamma)
    report = weighted_lstsq(X, curve.values - 1.0, curve.sigma, RD_POWER_NAMES, fixed=fixed)
    if report.condition_number > COND_WARN:
        warnings.warn(
            f"condition number {report.condition_number:.3g} exceeds {COND_WARN:g}; "
            "the detuning grid probably misses the sideband resonances",
            IllConditionedWarning,
        )
    return report


def project_physical(V: np.ndarray) -> tuple[np.ndarray, float]:
    """Shift ``V`` by the uncertainty-principle defect so ``V + i Sigma >= 0``.

    Returns the projected matrix and its Frobenius distance from ``V``.
    """
    lam = float(np.linalg.eigvalsh(V + 1j * SYMPLECTIC_FORM)[0])
    if lam >= 0:
        return V, 0.0
    shift = -lam
    return V + shift * np.eye(4), 2.0 * shift


def _refit_with_model_errors(locked: LockedScan, X, offset, y, report: FitReport, passes: int = 2) -> FitReport:
    """Refit with uncertainties evaluated at the fitted second moments.

    Sample-variance uncertainties scale with the sample variance itself, so
    weighting by them favours low draws and biases the fit by ``O(1/N)``.
    The sample count is recovered from ``sigma/value = sqrt(2/(N-1))``.
    """
    vals, sigs = locked.values, locked.sigma
    dof = 2.0 * (vals[:, 2] / sigs[:, 2]) ** 2
    for _ in range(passes):
        theta = np.array([report.coefficients[n] for n in COV_NAMES])
        pred = (X @ theta + offset).reshape(-1, 3)
        var_c = np.clip(pred[:, 0], 1e-12, None)
        var_s = np.clip(pred[:, 1], 1e-12, None)
        sig = np.stack(
            [
                var_c * np.sqrt(2.0 / dof),
                var_s * np.sqrt(2.0 / dof),
                np.sqrt((var_c * var_s + pred[:, 2] ** 2) / dof),
            ],
            axis=-1,
        ).reshape(-1)
        report = weighted_lstsq(X, y, sig, COV_NAMES)
    return report


def reconstruct_covariance(
    locked: LockedScan,
    cavity: CavityParams,
    omega_over_gamma: float,
    project: bool = False,
) -> ReconstructionResult:
    """Full mean vector and covariance matrix from a phase-locked scan."""
    if len(locked) < 10:
        raise ValueError(f"need at least 10 scan points, got {len(locked)}")
    D = locked.detuning
    X, offset = rd_locked_cov_design(cavity, D, omega_over_gamma)
    y = locked.values[:, 2:5].reshape(-1) - offset
    sig = locked.sigma[:, 2:5].reshape(-1)
    report = weighted_lstsq(X, y, sig, COV_NAMES)
    if np.all(sig > 0):
        report = _refit_with_model_errors(locked, X, offset, y, report)
    V = params_to_matrix([report.coefficients[n] for n in COV_NAMES])

    c, s, _ = rd_vectors(cavity, D, omega_over_gamma)
    Xm = np.empty((2 * len(D), 4))
    Xm[0::2], Xm[1::2] = c, s
    mean_fit = weighted_lstsq(Xm, locked.values[:, :2].reshape(-1), locked.sigma[:, :2].reshape(-1), QUADRATURES)
    mean = np.array([mean_fit.coefficients[n] for n in QUADRATURES])

    distance = 0.0
    if project:
        V, distance = project_physical(V)
        if distance > 0:
            resid = y - X @ matrix_to_params(V)
            report.residual_rms = float(np.sqrt(np.mean(resid**2)))
            report.coefficients = {n: float(v) for n, v in zip(COV_NAMES, matrix_to_params(V))}
    state = TwoModeState(mean, V)
    try:
        pur = purity(state)
    except NonPhysicalStateError:
        pur = float("nan")
    return ReconstructionResult(state, report, pur, energy_summary(state), distance)


def is_physical(result: ReconstructionResult) -> bool:
    return physicality_check(result.state).passed


# -- identifiability --------------------------------------------------------------------


def design_for(technique: str, grid, cavity: CavityParams | None = None, omega_over_gamma: float | None = None):
    technique = technique.upper().replace("-", "_")
    if technique == "HD":
        return hd_design(grid)
    if cavity is None or omega_over_gamma is None:
        raise ValueError(f"{technique} needs cavity parameters and omega_over_gamma")
    if technique == "RD_POWER":
        return rd_power_cov_design(cavity, grid, omega_over_gamma)
    if technique == "RD_LOCKED":
        return rd_locked_cov_design(cavity, grid, omega_over_gamma)[0]
    raise ValueError(f"unknown technique {technique!r}; expected HD, RD_power or RD_locked")


def identifiability_report(
    technique: str,
    grid,
    cavity: CavityParams | None = None,
    omega_over_gamma: float | None = None,
) -> IdentifiabilityReport:
    """Numerical rank and unobservable covariance directions of a technique.

    Directions are expressed in Frobenius-orthonormal coordinates (see
    :func:`params_to_matrix`).
    """
    X = design_for(technique, grid, cavity, omega_over_gamma)
    scale = np.array([1.0 if i == j else 1.0 / np.sqrt(2.0) for i, j in COV_INDEX])
    rank, _, s, Vt = _singular(X * scale)
    return IdentifiabilityReport(technique, rank, Vt[rank:], s)


def null_space_overlap(report: IdentifiabilityReport, V) -> float:
    """Norm of the projection of the normalized direction ``V`` onto the null space."""
    v = matrix_to_params(V, orthonormal=True)
    v = v / np.linalg.norm(v)
    return float(np.linalg.norm(report.null_space @ v)) if len(report.null_space) else 0.0


# -- comparison -------------------------------------------------------------------------


def compare_states(a: ScanCurve, b: ScanCurve, low: float = 1.5, high: float = 4.0) -> Comparison:
    """Chi-square distance between two scans taken on the same grid."""
    if a.kind is not b.kind:
        raise ValueError(f"cannot compare {a.kind.value} with {b.kind.value}")
    if len(a) != len(b) or not np.allclose(a.abscissa, b.abscissa, rtol=0, atol=1e-12):
        raise ValueError("scans were taken on different grids")
    diff2 = (a.values - b.values) ** 2
    var = a.sigma**2 + b.sigma**2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(diff2 == 0, 0.0, diff2 / var)
    chi2 = float(np.sum(terms))
    dof = len(a)
    per = chi2 / dof
    if per < low:
        verdict = VERDICT_SAME
    elif per > high:
        verdict = VERDICT_DIFFERENT
    else:
        verdict = VERDICT_UNSURE
    return Comparison(chi2, dof, per, verdict)


def default_detuning_grid(cavity: CavityParams | None = None, count: int = 161, span: float = 8.0) -> np.ndarray:
    grid = np.linspace(-span, span, count)
    if cavity is not None:
        grid = valid_detunings(cavity, grid)
    return grid
