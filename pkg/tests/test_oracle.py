"""Tests for the closed-form Gaussian results."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgelab.exceptions import NegativeWidth, VarianceCollapse
from bridgelab.oracle import (
    GaussianBridgeSpec,
    GaussianMode,
    GaussianPacket,
    GaussianState,
    bridge_width,
    collapse_profile,
    coupling_covariance,
    fisher_curvature,
    gaussian_bridge_variance,
    gaussian_mixed_difference,
    gaussian_pair,
    gaussian_state_from_pair,
    gaussian_state_tau_step,
    gaussian_t_step,
    gaussian_tau_step,
    packet_state,
    packet_width,
    printed_fisher_curvature,
    richardson,
    solve_alpha,
)
from bridgelab.state import from_wavefunction, to_wavefunction


class TestPacket:
    def test_width_doubles(self):
        assert packet_width(1.0, 2.0) == pytest.approx(2.0)

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            GaussianPacket(0.0)

    def test_state_matches_wavefunction_form(self, periodic_grid):
        state = packet_state(GaussianPacket(1.0, t=1.0), periodic_grid)
        back = from_wavefunction(to_wavefunction(state))
        valid = state.valid
        np.testing.assert_allclose(back.s.values[valid], state.s.values[valid], atol=1e-9)


class TestBridgeWidth:
    def test_example_branch(self):
        alpha = solve_alpha(1.0, 2.0, 1.0)
        assert alpha == pytest.approx(1.0)
        spec = GaussianBridgeSpec(1.0, 1.0, alpha)
        assert bridge_width(spec, 0.0) == pytest.approx(1.0)
        assert bridge_width(spec, 1.0) == pytest.approx(2.0)

    @given(
        sigma=st.floats(0.5, 2.0),
        t=st.floats(0.0, 3.0),
        tau=st.floats(0.2, 2.0),
    )
    @settings(deadline=None, max_examples=50)
    def test_solved_family_hits_packet_width(self, sigma, t, tau):
        alpha = solve_alpha(sigma, t, tau)
        spec = GaussianBridgeSpec(sigma, tau, alpha)
        assert bridge_width(spec, tau) == pytest.approx(packet_width(sigma, t), rel=1e-9)

    def test_infinite_parameter(self):
        spec = GaussianBridgeSpec(1.0, 1.0, np.inf)
        assert spec.inverse_alpha == 0.0
        assert bridge_width(spec, 0.5) == pytest.approx(0.5)

    def test_negative_width(self):
        spec = GaussianBridgeSpec(1.0, 1.0, -0.5)
        with pytest.raises(NegativeWidth):
            bridge_width(spec, 0.4)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            bridge_width(GaussianBridgeSpec(1.0, 1.0, 1.0), 1.5)

    @given(
        v0=st.floats(0.5, 2.0),
        v1=st.floats(0.5, 4.0),
        r=st.floats(0.0, 1.0),
    )
    @settings(deadline=None, max_examples=50)
    def test_exact_bridge_is_a_family_member(self, v0, v1, r):
        tau = 1.0
        c = coupling_covariance(v0, v1, tau)
        u = 1.0 + (c - v0) / tau
        spec = GaussianBridgeSpec(v0, tau, np.inf if u == 0 else 1.0 / u)
        exact = gaussian_bridge_variance(v0, v1, tau, r * tau)
        assert bridge_width(spec, r * tau) == pytest.approx(exact, rel=1e-10)

    def test_exact_bridge_endpoints(self):
        assert gaussian_bridge_variance(1.0, 3.0, 2.0, 0.0) == pytest.approx(1.0)
        assert gaussian_bridge_variance(1.0, 3.0, 2.0, 2.0) == pytest.approx(3.0)


class TestCollapseProfile:
    def test_endpoints(self):
        assert collapse_profile(1.0, 1.0, 1e-3, 2.0, 0.0) == pytest.approx((0.0, 1.0))
        assert collapse_profile(1.0, 1.0, 1e-3, 2.0, 1.0) == pytest.approx((2.0, 1e-3))

    def test_center_is_linear(self):
        centers = [collapse_profile(1.0, 2.0, 1e-3, 3.0, t)[0] for t in (0.5, 1.0, 1.5)]
        np.testing.assert_allclose(centers, [0.75, 1.5, 2.25])

    def test_unit_diffusion_form(self):
        _, width = collapse_profile(2.0, 1.0, 0.0, 0.0, 0.5)
        assert width == pytest.approx(2.0 * (1.0 + (0.5 - 1.0) * 0.5) * 0.5)


class TestGaussianFlows:
    def test_heat_and_anti_heat(self):
        mode = GaussianMode(0.0, 1.0)
        assert gaussian_tau_step(mode, 0.2).variance == pytest.approx(1.2)
        assert gaussian_tau_step(mode, 0.2, backward=True).variance == pytest.approx(0.8)

    def test_integral_preserved(self, periodic_grid):
        mode = GaussianMode(0.5, 1.0, 0.3)
        stepped = gaussian_tau_step(mode, 0.4)
        before = periodic_grid.integrate(mode.sample(periodic_grid))
        after = periodic_grid.integrate(stepped.sample(periodic_grid))
        assert after == pytest.approx(before, rel=1e-12)

    def test_anti_heat_collapse(self):
        with pytest.raises(VarianceCollapse):
            gaussian_tau_step(GaussianMode(0.0, 0.1), 0.2, backward=True)

    def test_pair_round_trip(self):
        state = GaussianState(0.3, 1.5, chirp=0.2, momentum=-0.7)
        back = gaussian_state_from_pair(gaussian_pair(state))
        assert back.center == pytest.approx(state.center)
        assert back.variance == pytest.approx(state.variance)
        assert back.chirp == pytest.approx(state.chirp)
        assert back.momentum == pytest.approx(state.momentum)

    def test_pair_needs_moderate_chirp(self):
        with pytest.raises(VarianceCollapse):
            gaussian_pair(GaussianState(0.0, 1.0, chirp=1.0))

    def test_t_step_follows_packet(self):
        packet = GaussianPacket(1.0)
        stepped = gaussian_t_step(GaussianState.from_packet(packet), 1.5)
        expected = GaussianState.from_packet(packet.at(1.5))
        assert stepped.variance == pytest.approx(expected.variance)
        assert stepped.chirp == pytest.approx(expected.chirp)

    def test_tau_step_at_rest(self):
        stepped = gaussian_state_tau_step(GaussianState(0.0, 1.0), 0.01)
        fwd, bwd = 2.01, 1.99
        assert stepped.variance == pytest.approx(1.0 / (1.0 / fwd + 1.0 / bwd))
        assert stepped.chirp == pytest.approx(0.5 * (1.0 / fwd - 1.0 / bwd))
        assert stepped.momentum == pytest.approx(0.0, abs=1e-15)


class TestCurvature:
    def test_limit(self):
        state = GaussianState(0.0, 1.0)
        estimate = gaussian_mixed_difference(state, 1e-3, 1e-3)
        assert estimate == pytest.approx(fisher_curvature(1.0), rel=1e-2)

    def test_richardson_improves(self):
        state = GaussianState(0.0, 2.0)
        coarse = gaussian_mixed_difference(state, 1e-2, 1e-2)
        fine = gaussian_mixed_difference(state, 5e-3, 5e-3)
        target = fisher_curvature(2.0)
        assert abs(richardson(coarse, fine) - target) < abs(fine - target)

    def test_classical_limit(self):
        assert fisher_curvature(1.0, hbar=1e-3) == pytest.approx(1e-6)
        assert printed_fisher_curvature(1.0, hbar=1e-3) == pytest.approx(2e-6)
