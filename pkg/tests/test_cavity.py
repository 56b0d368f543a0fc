import numpy as np
import pytest

from sidebandtomo.cavity import (
    CavityParams,
    Coupling,
    apply_cavity_channel,
    effective_reflection,
    g_functions,
    kappa_from_cavity,
    reflection,
    sideband_factors,
    sideband_response,
    transmission,
    valid_detunings,
)
from sidebandtomo.errors import CarrierExtinguishedError, NonPhysicalStateError
from sidebandtomo.state import ModeIndex, TwoModeState, physicality_check, single_mode_marginal, vacuum

from conftest import BENCH_W, random_cavity, random_physical_state


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(r0_intensity=-0.1),
        dict(r0_intensity=1.5),
        dict(bandwidth_mhz=0.0),
        dict(mode_matching_eta=0.0),
        dict(mode_matching_eta=1.2),
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        CavityParams(**kwargs)


def test_coupling_from_string():
    assert CavityParams(coupling="under").coupling is Coupling.UNDERCOUPLED


class TestReflection:
    def test_asymmetry_cavity_on_resonance(self):
        r = reflection(CavityParams(0.0012, 4.1, "under"), 0.0)
        assert r.real == pytest.approx(0.034641, rel=1e-4)
        assert abs(r) ** 2 == pytest.approx(0.0012)

    def test_overcoupled_sign(self):
        assert reflection(CavityParams(0.04, coupling="over"), 0.0) == pytest.approx(-0.2)

    def test_far_off_resonance(self):
        p = CavityParams(0.3)
        assert reflection(p, 1e9) == pytest.approx(1, abs=1e-8)
        assert reflection(p, -1e9) == pytest.approx(1, abs=1e-8)

    def test_half_linewidth_point(self):
        p = CavityParams(0.2)
        assert abs(reflection(p, 1.0)) ** 2 == pytest.approx((0.2 + 1) / 2)

    def test_energy_conservation(self, rng):
        p = random_cavity(rng)
        D = np.linspace(-50, 50, 1000)
        np.testing.assert_allclose(transmission(p, D) ** 2 + np.abs(reflection(p, D)) ** 2, 1, atol=1e-14)

    def test_transmission_limits(self):
        assert transmission(CavityParams(0.0), 0.0) == pytest.approx(1.0)
        assert transmission(CavityParams(0.5), 1e8) == pytest.approx(0, abs=1e-7)


class TestEffectiveReflection:
    def test_perfect_matching(self, rng):
        p = CavityParams(0.1, mode_matching_eta=1.0)
        D = rng.normal(size=20)
        np.testing.assert_array_equal(effective_reflection(p, D), reflection(p, D))

    def test_analysis_cavity(self):
        p = CavityParams(0.04, 6.0, "over", 0.935)
        assert effective_reflection(p, 0.0) == pytest.approx(0.065 + 0.935 * -0.2)

    def test_mismatch_route_to_attenuation(self):
        p = CavityParams(0.0012, 4.1, "under", 0.51)
        assert kappa_from_cavity(p) == pytest.approx(0.49 + 0.51 * np.sqrt(0.0012))

    def test_bounded(self, rng):
        p = random_cavity(rng)
        assert np.all(np.abs(effective_reflection(p, np.linspace(-20, 20, 501))) <= 1 + 1e-15)


class TestSidebandResponse:
    def test_transparent_far_away(self):
        resp = sideband_response(CavityParams(0.3, mode_matching_eta=0.9), 1e7, BENCH_W)
        assert resp.r_upper == pytest.approx(1, abs=1e-6)
        assert resp.r_lower == pytest.approx(1, abs=1e-6)
        assert (resp.g_plus, resp.g_minus, resp.g_r, resp.g_i) == pytest.approx((2, 0, 0.5, 0), abs=1e-6)

    def test_upper_sideband_resonant(self):
        w = 2.0
        resp = sideband_response(CavityParams(0.0), w, w)
        assert abs(resp.r_upper) == pytest.approx(0, abs=1e-12)
        assert resp.g_minus == pytest.approx(-abs(resp.r_lower) ** 2)

    def test_lower_sideband_resonant(self):
        w = 2.0
        resp = sideband_response(CavityParams(0.0), -w, w)
        assert abs(resp.r_lower) == pytest.approx(0, abs=1e-12)

    def test_benchmark_resonance_positions(self):
        p = CavityParams(0.0)
        D = np.linspace(-6, 6, 12001)
        r_up, r_low = sideband_factors(p, D[np.abs(D) > 1e-3], BENCH_W)
        Dv = D[np.abs(D) > 1e-3]
        assert Dv[np.argmin(np.abs(r_up))] == pytest.approx(17 / 6, abs=1e-3)
        assert Dv[np.argmin(np.abs(r_low))] == pytest.approx(-17 / 6, abs=1e-3)

    def test_carrier_extinguished(self):
        with pytest.raises(CarrierExtinguishedError):
            sideband_response(CavityParams(0.0), 0.0, 1.0)

    def test_valid_detunings_drops_extinction(self):
        D = valid_detunings(CavityParams(0.0), np.linspace(-1, 1, 5))
        assert 0.0 not in D and len(D) == 4

    def test_g_closure(self, rng):
        for _ in range(10):
            p = random_cavity(rng)
            D = valid_detunings(p, np.linspace(-8, 8, 161))
            ru, rl = sideband_factors(p, D, rng.uniform(0.5, 5))
            gp, gm, gr, gi = g_functions(ru, rl)
            assert np.all(np.abs(ru) <= 1 + 1e-12) and np.all(np.abs(rl) <= 1 + 1e-12)
            assert np.all((gp >= 0) & (gp <= 2 + 1e-12))
            assert np.all(np.abs(gm) <= gp + 1e-12)
            np.testing.assert_allclose(4 * (gr**2 + gi**2), np.abs(ru) ** 2 * np.abs(rl) ** 2, atol=1e-14)

    def test_symmetry(self, rng):
        p = CavityParams(0.1, coupling="over", mode_matching_eta=0.8)
        D = np.linspace(0.1, 7, 50)
        gp1, gm1, _, _ = g_functions(*sideband_factors(p, D, BENCH_W))
        gp2, gm2, _, _ = g_functions(*sideband_factors(p, -D, BENCH_W))
        np.testing.assert_allclose(gp1, gp2, atol=1e-14)
        np.testing.assert_allclose(gm1, -gm2, atol=1e-14)


class TestChannel:
    def test_vacuum_preserved(self, rng):
        for _ in range(5):
            p = random_cavity(rng)
            for D in valid_detunings(p, np.linspace(-6, 6, 25)):
                assert apply_cavity_channel(vacuum(), p, D, 2.3).allclose(vacuum(), atol=1e-14)

    def test_resonant_mode_becomes_vacuum(self, rng):
        s = random_physical_state(rng)
        out = apply_cavity_channel(s, CavityParams(0.0), 1.5, 1.5)
        m = single_mode_marginal(out, ModeIndex.UPPER)
        np.testing.assert_allclose(m.mean, 0, atol=1e-12)
        np.testing.assert_allclose(m.cov, np.eye(2), atol=1e-12)

    def test_output_physical_and_contractive(self, rng):
        for _ in range(30):
            s = random_physical_state(rng)
            p = random_cavity(rng)
            D = float(rng.uniform(-6, 6))
            out = apply_cavity_channel(s, p, D, float(rng.uniform(0.5, 4)))
            assert physicality_check(out).margin >= -1e-9
            for m in ModeIndex:
                before = np.trace(single_mode_marginal(s, m).cov) / 2 - 1
                after = np.trace(single_mode_marginal(out, m).cov) / 2 - 1
                assert after <= before + 1e-12

    def test_rejects_nonphysical(self):
        with pytest.raises(NonPhysicalStateError):
            apply_cavity_channel(TwoModeState(np.zeros(4), 0.5 * np.eye(4)), CavityParams(0.1), 0.3, 1.0)
