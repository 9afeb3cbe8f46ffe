"""Tests for the heat kernel, the Schrödinger-system solver and bridge interiors."""

import numpy as np
import pytest

from bridgelab.bridge import (
    BridgeProblem,
    HeatKernel,
    bridge_k_functional,
    collapse_bridge,
    heat_kernel_apply,
    interior,
    interior_state,
    normalized_log_gaussian,
    reversed_problem,
    sign_property_samples,
    solve_schrodinger_system,
    tau_step,
)
from bridgelab.exceptions import AntiHeatUnstable, GridError, NonConvergence, ZeroMarginal
from bridgelab.functionals import mean_position, position_variance
from bridgelab.grid import Grid1D, RealField
from bridgelab.oracle import GaussianState, gaussian_bridge_variance, gaussian_state_tau_step
from bridgelab.state import BridgePair, HydroState, from_bridge_pair, to_bridge_pair


def gaussian_problem(grid, v0=1.0, v1=2.0, tau=1.0):
    return BridgeProblem.from_logs(
        grid,
        normalized_log_gaussian(grid, 0.0, v0),
        normalized_log_gaussian(grid, 0.0, v1),
        tau,
    )


@pytest.fixture(scope="module")
def solution(closed_grid):
    return solve_schrodinger_system(gaussian_problem(closed_grid))


@pytest.fixture(scope="module")
def periodic_solution():
    grid = Grid1D.periodic(-16.0, 16.0, 256)
    return solve_schrodinger_system(gaussian_problem(grid, v1=1.5))


class TestHeatKernel:
    def test_constants_fixed(self, closed_grid):
        kernel = HeatKernel(closed_grid, 0.5)
        np.testing.assert_allclose(kernel.apply(np.ones(closed_grid.n)), 1.0, rtol=1e-12)

    def test_log_apply_matches_apply(self, closed_grid):
        kernel = HeatKernel(closed_grid, 0.5)
        f = np.exp(-closed_grid.points**2)
        np.testing.assert_allclose(np.exp(kernel.log_apply(np.log(f))), kernel.apply(f), rtol=1e-10)

    def test_adjoint_preserves_integral(self, closed_grid):
        kernel = HeatKernel(closed_grid, 0.3)
        f = np.exp(-((closed_grid.points - 1.0) ** 2))
        pushed = np.exp(kernel.log_apply_adjoint(np.log(f)))
        assert closed_grid.integrate(pushed) == pytest.approx(closed_grid.integrate(f), rel=1e-12)

    def test_zero_step_is_identity(self, closed_grid):
        kernel = HeatKernel(closed_grid, 0.0)
        assert kernel.is_identity
        f = np.linspace(0.0, 1.0, closed_grid.n)
        np.testing.assert_array_equal(kernel.apply(f), f)

    def test_negative_step_rejected(self, closed_grid):
        with pytest.raises(ValueError):
            HeatKernel(closed_grid, -0.1)

    def test_spectral_smoothing_adds_variance(self, periodic_grid):
        rho = RealField(periodic_grid, np.exp(normalized_log_gaussian(periodic_grid, 0.0, 1.0)))
        smoothed = heat_kernel_apply(rho, 0.5)
        state = HydroState.from_arrays(periodic_grid, smoothed.values)
        assert position_variance(state) == pytest.approx(1.5, rel=1e-10)

    def test_normalized_log_gaussian(self, closed_grid):
        values = np.exp(normalized_log_gaussian(closed_grid, 0.5, 1e-4))
        assert closed_grid.integrate(values) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("grid_name", ["closed_grid", "periodic_grid"])
    def test_tiny_step_is_identity(self, request, grid_name):
        grid = request.getfixturevalue(grid_name)
        rho = RealField(grid, np.exp(normalized_log_gaussian(grid, 0.3, 1.0)))
        smoothed = heat_kernel_apply(rho, 1e-8)
        np.testing.assert_allclose(smoothed.values, rho.values, atol=1e-6)


class TestSolver:
    def test_converges(self, solution):
        assert solution.marginal_residual <= 1e-10
        assert solution.residual_history[-1] == solution.marginal_residual
        assert solution.residual_history[0] > solution.marginal_residual

    @pytest.mark.parametrize(("v1", "shift"), [(1.5, 0.0), (0.3, 1.0)])
    def test_defect_never_increases(self, closed_grid, v1, shift):
        problem = BridgeProblem.from_logs(
            closed_grid,
            normalized_log_gaussian(closed_grid, 0.0, 1.0),
            normalized_log_gaussian(closed_grid, shift, v1),
            1.0,
        )
        history = np.array(solve_schrodinger_system(problem).residual_history)
        assert len(history) > 2
        assert np.all(np.diff(history) <= 1e-13)

    def test_pure_diffusion(self, closed_grid):
        rho0 = RealField(closed_grid, np.exp(normalized_log_gaussian(closed_grid, 0.0, 1.0)))
        rho1 = heat_kernel_apply(rho0, 1.0)
        result = solve_schrodinger_system(BridgeProblem(closed_grid, rho0, rho1, 1.0))
        assert result.iterations <= 2
        phi_t = result.phiT.values
        resolved = rho1.values > 1e-8 * rho1.values.max()
        np.testing.assert_allclose(phi_t[resolved], phi_t[closed_grid.n // 2], rtol=1e-6)
        ratio = result.phi0.values / rho0.values
        np.testing.assert_allclose(ratio[resolved], ratio[closed_grid.n // 2], rtol=1e-6)

    def test_equal_marginals_are_symmetric(self, closed_grid):
        result = solve_schrodinger_system(gaussian_problem(closed_grid, v1=1.0))
        scale = result.phi0.values.max()
        np.testing.assert_allclose(result.phi0.values, result.phiT.values, atol=1e-8 * scale)
        for tau_prime in (0.2, 0.35):
            _, early = interior(result, tau_prime)
            _, late = interior(result, 1.0 - tau_prime)
            np.testing.assert_allclose(early.values, late.values, atol=1e-8)
        _, middle = interior(result, 0.5)
        np.testing.assert_allclose(middle.values, middle.values[::-1], atol=1e-8)

    def test_gauge_fixed(self, solution):
        grid = solution.grid
        assert grid.integrate(solution.phi0.values) == pytest.approx(
            grid.integrate(solution.phiT.values), rel=1e-10
        )

    def test_end_marginals(self, solution):
        _, rho0 = interior(solution, 0.0)
        _, rho1 = interior(solution, solution.tau)
        np.testing.assert_allclose(rho0.values, solution.problem.rho0.values, atol=1e-10)
        np.testing.assert_allclose(rho1.values, solution.problem.rho1.values, atol=1e-8)

    @pytest.mark.parametrize("tau_prime", [0.25, 0.5, 0.75])
    def test_interior_variance(self, solution, tau_prime):
        variance = position_variance(interior_state(solution, tau_prime))
        expected = gaussian_bridge_variance(1.0, 2.0, 1.0, tau_prime)
        assert variance == pytest.approx(expected, abs=1e-4)

    def test_reversal_mirrors(self, solution):
        mirrored = solve_schrodinger_system(reversed_problem(solution.problem))
        for tau_prime in (0.3, 0.5):
            _, forward = interior(solution, tau_prime)
            _, backward = interior(mirrored, 1.0 - tau_prime)
            np.testing.assert_allclose(backward.values, forward.values, atol=1e-8)

    def test_interior_out_of_range(self, solution):
        with pytest.raises(ValueError):
            interior(solution, 1.5)

    def test_non_convergence(self, closed_grid):
        with pytest.raises(NonConvergence) as info:
            solve_schrodinger_system(gaussian_problem(closed_grid), tol=1e-14, max_iter=1)
        assert info.value.iterations == 1
        assert info.value.residual > 0
        assert info.value.exit_code == 3

    def test_zero_marginal(self, closed_grid):
        rho0 = np.where(np.abs(closed_grid.points) < 2.0, 0.25, 0.0)
        rho1 = np.exp(normalized_log_gaussian(closed_grid, 0.0, 1.0))
        problem = BridgeProblem(
            closed_grid,
            RealField(closed_grid, rho0 / closed_grid.integrate(rho0)),
            RealField(closed_grid, rho1),
            1.0,
        )
        with pytest.raises(ZeroMarginal):
            solve_schrodinger_system(problem)

    def test_unnormalized_marginal(self, closed_grid):
        rho = RealField(closed_grid, np.full(closed_grid.n, 1.0))
        with pytest.raises(ValueError):
            BridgeProblem(closed_grid, rho, rho, 1.0)


class TestBridgeInvariants:
    def test_k_is_conserved(self, periodic_solution):
        values = [bridge_k_functional(interior(periodic_solution, t)[0]) for t in (0.2, 0.5, 0.8)]
        np.testing.assert_allclose(values, values[0], rtol=1e-6, atol=1e-10)
        assert abs(values[0]) > 1e-3

    def test_sign_property(self, periodic_solution):
        samples = sign_property_samples(periodic_solution, [0.2, 0.4, 0.6, 0.8], 1e-3)
        assert all(s.status in ("pass", "inconclusive") for s in samples)
        assert any(s.status == "pass" for s in samples)


class TestTauStep:
    def test_matches_gaussian_flow(self, gaussian_state):
        pair = tau_step(to_bridge_pair(gaussian_state), 0.01)
        state = from_bridge_pair(pair, normalize=True)
        expected = gaussian_state_tau_step(GaussianState(0.0, 1.0), 0.01)
        assert position_variance(state) == pytest.approx(expected.variance, rel=1e-10)

    def test_preserves_born_norm(self, gaussian_state):
        pair = to_bridge_pair(gaussian_state)
        stepped = tau_step(pair, 0.01)
        assert np.all(np.isfinite(stepped.density().values))
        assert stepped.born_norm() == pytest.approx(pair.born_norm(), abs=1e-8)

    def test_preserves_product_for_moving_state(self, moving_state):
        pair = to_bridge_pair(moving_state)
        assert tau_step(pair, 0.005).born_norm() == pytest.approx(1.0, abs=1e-8)

    def test_zero_step_is_identity(self, gaussian_state):
        pair = to_bridge_pair(gaussian_state)
        assert tau_step(pair, 0.0) is pair

    def test_agrees_with_bridge_interior(self, periodic_solution):
        pair, _ = interior(periodic_solution, 0.4)
        stepped = tau_step(pair, 0.01)
        _, rho = interior(periodic_solution, 0.41)
        np.testing.assert_allclose(stepped.density().values, rho.values, atol=1e-10)

    def test_closed_grid_rejected(self, closed_grid):
        state = HydroState.gaussian(closed_grid, 1.0)
        with pytest.raises(GridError):
            tau_step(to_bridge_pair(state), 0.01)

    def test_rough_backward_function_rejected(self, periodic_grid):
        rng = np.random.default_rng(0)
        pair = BridgePair(
            periodic_grid,
            RealField(periodic_grid, np.ones(periodic_grid.n)),
            RealField(periodic_grid, 1.0 + 0.1 * rng.random(periodic_grid.n)),
        )
        with pytest.raises(AntiHeatUnstable):
            tau_step(pair, 1.0)


class TestCollapse:
    def test_center_moves_linearly(self, closed_grid):
        state0 = HydroState.gaussian(closed_grid, 1.0)
        solution = collapse_bridge(state0, 2.0, 1e-2, 1.0)
        center = mean_position(interior_state(solution, 0.5))
        assert center == pytest.approx(1.0, abs=2e-2)

    def test_invalid_floor(self, closed_grid):
        state0 = HydroState.gaussian(closed_grid, 1.0)
        with pytest.raises(ValueError):
            collapse_bridge(state0, 2.0, 0.0, 1.0)
