import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from sidebandtomo.cavity import CavityParams
from sidebandtomo.errors import NonPhysicalStateError
from sidebandtomo.preparation import (
    PreparationParams,
    attenuate_mode,
    displacement_map,
    kappa_for_ratio,
    kappa_from_asymmetry_cavity,
    prepare,
    prepare_psi1,
    prepare_psi2,
    prepare_rho,
    prepare_rho_r,
    randomize_displacement,
)
from sidebandtomo.state import (
    ModeIndex,
    TwoModeState,
    energy_summary,
    physicality_check,
    purity,
    single_mode_marginal,
    vacuum,
)

from conftest import random_physical_state

unit = hst.floats(0.0, 1.0)
energies = hst.floats(0.0, 100.0)


class TestCoherentStages:
    def test_psi1_conjugate_amplitudes(self):
        beta = 1.2 - 0.7j
        s = prepare_psi1(beta)
        np.testing.assert_allclose(s.mean, [2 * 1.2, 2 * -0.7, 2 * 1.2, 2 * 0.7])
        np.testing.assert_array_equal(s.cov, np.eye(4))
        assert purity(s) == pytest.approx(1)

    def test_psi2_is_pure_and_scaled(self):
        beta, kappa = 0.5 + 2j, 0.3
        s = prepare_psi2(beta, kappa)
        np.testing.assert_allclose(s.cov, np.eye(4), atol=1e-15)
        np.testing.assert_allclose(s.mean, displacement_map(kappa) @ [beta.real, beta.imag])

    def test_loss_on_thermal_mode(self):
        # a thermal mode of variance n through transmission k^2 has variance k^2 n + 1 - k^2
        s = TwoModeState(np.zeros(4), np.diag([5.0, 5.0, 3.0, 3.0]))
        out = attenuate_mode(s, "lower", 0.5)
        np.testing.assert_allclose(np.diag(out.cov), [5, 5, 0.25 * 3 + 0.75, 0.25 * 3 + 0.75])

    @pytest.mark.parametrize("kappa", [-0.1, 1.1])
    def test_invalid_kappa(self, kappa):
        with pytest.raises(ValueError):
            attenuate_mode(vacuum(), ModeIndex.LOWER, kappa)
        with pytest.raises(ValueError):
            PreparationParams(kappa=kappa)

    def test_loss_rejects_unphysical(self):
        with pytest.raises(NonPhysicalStateError):
            attenuate_mode(TwoModeState(np.zeros(4), 0.5 * np.eye(4)), ModeIndex.LOWER, 0.5)

    def test_loss_keeps_physicality(self, rng):
        for _ in range(20):
            s = random_physical_state(rng)
            out = attenuate_mode(s, ModeIndex.UPPER, float(rng.uniform()))
            assert physicality_check(out).passed


class TestRandomized:
    @given(unit, energies)
    def test_energy_closed_form(self, kappa, b0):
        e = energy_summary(randomize_displacement(kappa, b0))
        assert e.e_upper == pytest.approx(2 * b0)
        assert e.e_lower == pytest.approx(2 * kappa**2 * b0)

    @given(unit, hst.floats(1e-3, 100.0))
    def test_ratio_is_kappa_squared(self, kappa, b0):
        assert energy_summary(randomize_displacement(kappa, b0)).ratio == pytest.approx(kappa**2)

    def test_benchmark_ratio(self):
        rho = prepare_rho(PreparationParams(kappa=10 / 19, beta0_sq=3.0))
        assert energy_summary(rho).ratio == pytest.approx(0.277, abs=5e-4)
        assert round(energy_summary(rho).ratio, 2) == 0.28

    @given(unit, energies)
    @settings(max_examples=50)
    def test_classical(self, kappa, b0):
        # a mixture of coherent states: cov - I is positive semidefinite
        rho = randomize_displacement(kappa, b0)
        assert np.linalg.eigvalsh(rho.cov - np.eye(4))[0] >= -1e-9
        assert physicality_check(rho).passed

    @given(unit, energies)
    @settings(max_examples=50)
    def test_single_modes_thermal(self, kappa, b0):
        rho = randomize_displacement(kappa, b0)
        for mode in ModeIndex:
            m = single_mode_marginal(rho, mode)
            np.testing.assert_allclose(m.cov, m.cov[0, 0] * np.eye(2), atol=1e-12)
            np.testing.assert_array_equal(m.mean, 0)

    def test_limits(self):
        b0 = 2.5
        assert randomize_displacement(0.3, 0.0) == vacuum()
        np.testing.assert_allclose(randomize_displacement(0.0, b0).cov[2:, 2:], np.eye(2))
        rho_r = prepare_rho_r(b0)
        e = energy_summary(rho_r)
        assert e.imbalance == pytest.approx(0)
        # conjugate amplitudes leave p_up - p_low and q_up + q_low at vacuum
        assert rho_r.cov[0, 0] + rho_r.cov[2, 2] - 2 * rho_r.cov[0, 2] == pytest.approx(2)
        assert rho_r.cov[1, 1] + rho_r.cov[3, 3] + 2 * rho_r.cov[1, 3] == pytest.approx(2)

    def test_order_of_operations(self):
        # randomize then attenuate == attenuate then randomize
        for kappa, b0 in [(0.2, 1.0), (10 / 19, 7.0), (0.9, 0.3)]:
            late = attenuate_mode(prepare_rho_r(b0), ModeIndex.LOWER, kappa)
            assert late.allclose(randomize_displacement(kappa, b0), atol=1e-12)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(7)
        kappa, b0, n = 0.6, 2.0, 400_000
        betas = rng.normal(scale=np.sqrt(b0 / 2), size=(n, 2))
        means = betas @ displacement_map(kappa).T
        empirical = np.eye(4) + means.T @ means / n
        np.testing.assert_allclose(randomize_displacement(kappa, b0).cov, empirical, atol=0.05)

    def test_prepare_dispatch(self):
        assert prepare(PreparationParams(beta=1 + 1j, kappa=0.5)).allclose(prepare_psi2(1 + 1j, 0.5))
        assert prepare(PreparationParams(kappa=0.5, beta0_sq=2.0)).allclose(randomize_displacement(0.5, 2.0))


class TestHelpers:
    def test_kappa_for_ratio(self):
        assert kappa_for_ratio(0.25) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            kappa_for_ratio(1.5)

    def test_kappa_from_cavity(self):
        p = CavityParams(0.0012, 4.1, "under", 1.0)
        assert kappa_from_asymmetry_cavity(p) == pytest.approx(np.sqrt(0.0012))
