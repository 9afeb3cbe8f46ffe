"""The experiments behind the `bridgelab` command.

Each runner takes a validated ExperimentConfig and returns an ExperimentRecord:
a fixed column layout, one row per sample, and the list of tolerance checks
that failed. Runners never write files; scripts/lab.py does that.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from tqdm import tqdm

from bridgelab.bridge import (
    BridgeProblem,
    collapse_bridge,
    interior_state,
    normalized_log_gaussian,
    sign_property_samples,
    solve_schrodinger_system,
    tau_step,
)
from bridgelab.exceptions import InvariantFailure, ScalingError
from bridgelab.functionals import (
    energies,
    fisher_length2,
    heisenberg_product,
    heisenberg_rhs,
    k_from_imaginary_nlgt,
    mean_position,
    position_variance,
    rotated_energy_paths,
)
from bridgelab.grid import Grid1D, RealField
from bridgelab.io import ordered_parallel_map
from bridgelab.oracle import (
    GaussianBridgeSpec,
    GaussianPacket,
    GaussianState,
    bridge_width,
    collapse_profile,
    fisher_curvature,
    gaussian_mixed_difference,
    mixed_difference,
    packet_wavefunction,
    packet_width,
    printed_fisher_curvature,
    richardson,
    solve_alpha,
)
from bridgelab.propagator import propagate, step_schrodinger, wavefunction_energy
from bridgelab.state import (
    HydroState,
    apply_nlgt,
    from_bridge_pair,
    from_wavefunction,
    nlgt_wavefunction,
    to_bridge_pair,
    to_wavefunction,
)

logger = logging.getLogger(__name__)

# Acceptance tolerances shared by the experiment tables and `check`.
VARIANCE_TOLERANCE = 1e-6
BRIDGE_VARIANCE_TOLERANCE = 1e-4
# Collapse centres are held to this fraction of max(1, |x_m|).
CENTER_TOLERANCE = 2e-2
COLLAPSE_WIDTH_TOLERANCE = 2e-2
HEISENBERG_SLACK = 1e-10
CLOSED_FORM_TOLERANCE = 1e-8
ROTATION_TOLERANCE = 1e-10
BORN_TOLERANCE = 1e-12
CRAMER_RAO_TOLERANCE = 1e-8
K_TOLERANCE = 1e-6
ENERGY_TOLERANCE = 1e-10
CURVATURE_TOLERANCE = 1e-2

# Marginals of the `check` bridges are clipped at this fraction of their maximum.
MARGINAL_CLIP = 1e-30
SIGN_SAMPLES = 5

PROPAGATE_COLUMNS = ("t", "variance_grid", "variance_oracle", "l2_error", "h_drift")
BRIDGE_COLUMNS = (
    "tau_prime",
    "variance_grid",
    "variance_oracle",
    "iterations",
    "marginal_residual",
    "d_fisher_dtau",
    "d_sigma2p_dtau",
)
COLLAPSE_COLUMNS = ("tau_prime", "center_grid", "center_oracle", "variance_grid", "variance_oracle")
SWEEP_COLUMNS = (
    "alpha",
    "sigma2_x",
    "sigma2_p",
    "product",
    "product_rhs",
    "h_alpha_rotation",
    "h_alpha_direct",
    "k_alpha_rotation",
    "k_alpha_direct",
    "born_residual",
)
CURVATURE_COLUMNS = (
    "delta",
    "exact_estimate",
    "numeric_estimate",
    "target",
    "printed_target",
    "richardson",
)
CHECK_COLUMNS = ("state", "invariant", "status", "margin", "n_inconclusive")


@dataclass
class ExperimentRecord:
    """Rows of one experiment, in column order.

    Raises:
        InvariantFailure: a row has the wrong length or a non-finite number.
    """

    columns: tuple
    rows: list
    failures: list = field(default_factory=list)

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise InvariantFailure(
                    f"row {i} has {len(row)} values for {len(self.columns)} columns"
                )
            for name, value in zip(self.columns, row):
                if isinstance(value, str):
                    continue
                if not math.isfinite(float(value)):
                    raise InvariantFailure(f"non-finite {name} in row {i}: {value!r}")

    @property
    def ok(self):
        return not self.failures


def make_grid(grid_config):
    return Grid1D(grid_config.x_min, grid_config.x_max, grid_config.n, grid_config.mode)


def _relative(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _samples(stop, n_samples):
    if n_samples == 1:
        return [float(stop)]
    return [float(v) for v in np.linspace(0.0, stop, n_samples)]


def run_propagate(config, progress=False, max_workers=None):
    """Free spreading of a Gaussian packet against the closed-form width."""
    grid = make_grid(config.grid)
    hbar, mass, sigma = config.physics.hbar, config.physics.mass, config.physics.sigma
    packet = GaussianPacket(sigma, 0.0, 0.0, hbar, mass)
    psi = packet_wavefunction(packet, grid)
    energy0 = wavefunction_energy(psi, hbar, mass)

    rows, failures = [], []
    elapsed = 0.0
    for t in tqdm(_samples(config.schedule.t, config.schedule.n_samples), disable=not progress):
        psi = propagate(psi, t - elapsed, config.schedule.dt, hbar, mass)
        elapsed = t
        state = from_wavefunction(psi, hbar, mass)
        variance = position_variance(state)
        oracle = packet_width(sigma, t, hbar, mass)
        exact = packet_wavefunction(packet.at(t), grid).values
        l2_error = math.sqrt(grid.integrate(np.abs(psi.values - exact) ** 2))
        drift = abs(wavefunction_energy(psi, hbar, mass) - energy0)
        rows.append((t, variance, oracle, l2_error, drift))
        if abs(variance - oracle) > VARIANCE_TOLERANCE:
            failures.append(f"variance {variance!r} at t={t} misses {oracle!r}")
        if drift > ENERGY_TOLERANCE * max(1.0, energy0):
            failures.append(f"energy drifts by {drift:.3g} at t={t}")
    return ExperimentRecord(PROPAGATE_COLUMNS, rows, failures)


def run_bridge(config, progress=False, max_workers=None):
    """Bridge between the packet at t = 0 and at t, against the Gaussian bridge-width family."""
    grid = make_grid(config.grid)
    hbar, mass, sigma = config.physics.hbar, config.physics.mass, config.physics.sigma
    t, tau = config.schedule.t, config.schedule.tau
    end_variance = packet_width(sigma, t, hbar, mass)
    problem = BridgeProblem.from_logs(
        grid,
        normalized_log_gaussian(grid, 0.0, sigma),
        normalized_log_gaussian(grid, 0.0, end_variance),
        tau,
        hbar,
        mass,
    )
    solution = solve_schrodinger_system(problem, config.solver.tol, config.solver.max_iter)
    spec = GaussianBridgeSpec(sigma, tau, solve_alpha(sigma, t, tau, hbar, mass), 0.0, hbar, mass)
    logger.info("bridge width family parameter %r", spec.alpha_param)

    taus = _samples(tau, config.schedule.n_samples)
    signs = sign_property_samples(solution, taus, config.schedule.dtau)
    rows, failures = [], []
    for tau_prime, sign in zip(tqdm(taus, disable=not progress), signs):
        variance = position_variance(interior_state(solution, tau_prime))
        oracle = bridge_width(spec, tau_prime)
        rows.append(
            (
                tau_prime,
                variance,
                oracle,
                solution.iterations,
                solution.marginal_residual,
                sign.d_fisher,
                sign.d_sigma2_p,
            )
        )
        if abs(variance - oracle) > BRIDGE_VARIANCE_TOLERANCE:
            failures.append(f"variance {variance!r} at tau'={tau_prime} misses {oracle!r}")
        if sign.status == "fail":
            failures.append(f"Fisher length and momentum spread move together at tau'={tau_prime}")
    return ExperimentRecord(BRIDGE_COLUMNS, rows, failures)


def run_collapse(config, progress=False, max_workers=None):
    """Bridge from the packet onto a narrow Gaussian at x_m, against the collapse profile.

    Centres are held to CENTER_TOLERANCE of max(1, |x_m|) and widths to
    COLLAPSE_WIDTH_TOLERANCE relative to the profile width.
    """
    grid = make_grid(config.grid)
    hbar, mass, sigma = config.physics.hbar, config.physics.mass, config.physics.sigma
    tau = config.schedule.tau
    x_m, floor = config.collapse.x_m, config.collapse.width_floor
    state0 = HydroState.gaussian(grid, sigma, hbar=hbar, mass=mass)
    solution = collapse_bridge(
        state0, x_m, floor, tau, config.solver.tol, config.solver.max_iter
    )

    rows, failures = [], []
    for tau_prime in tqdm(_samples(tau, config.schedule.n_samples), disable=not progress):
        state = interior_state(solution, tau_prime)
        center, variance = mean_position(state), position_variance(state)
        center_oracle, width_oracle = collapse_profile(
            sigma, tau, floor, x_m, tau_prime, hbar, mass
        )
        rows.append((tau_prime, center, center_oracle, variance, width_oracle))
        if abs(center - center_oracle) > CENTER_TOLERANCE * max(1.0, abs(x_m)):
            failures.append(f"centre {center!r} at tau'={tau_prime} misses {center_oracle!r}")
        if abs(variance - width_oracle) > COLLAPSE_WIDTH_TOLERANCE * width_oracle:
            failures.append(f"width {variance!r} at tau'={tau_prime} misses {width_oracle!r}")
    return ExperimentRecord(COLLAPSE_COLUMNS, rows, failures)


def born_residual(state, alpha_r):
    """Largest pointwise departure of |psi(a)|**2 and phi(a) phi_hat(a) from rho.

    The pair is skipped, with a warning, when the rescaled action is too large
    for it.
    """
    rho = state.rho.values
    valid = state.valid
    psi = nlgt_wavefunction(state, alpha_r).values
    residual = float(np.max(np.abs(np.abs(psi[valid]) ** 2 - rho[valid])))
    try:
        pair = to_bridge_pair(apply_nlgt(state, alpha_r))
    except ScalingError as e:
        logger.warning("alpha=%g: pair form skipped (%s)", alpha_r, e)
        return residual
    pair_rho = pair.density().values
    return max(residual, float(np.max(np.abs(pair_rho[valid] - rho[valid]))))


def _sweep_row(state, alpha_r):
    sigma2_x, sigma2_p, product = heisenberg_product(state, alpha_r, check=False)
    rhs = heisenberg_rhs(state, alpha_r)
    (h_rot, k_rot), (h_dir, k_dir) = rotated_energy_paths(state, alpha_r)
    return (
        alpha_r,
        sigma2_x,
        sigma2_p,
        product,
        rhs,
        h_rot,
        h_dir,
        k_rot,
        k_dir,
        born_residual(state, alpha_r),
    )


def run_nlgt_sweep(config, progress=False, max_workers=None):
    """Uncertainty product and rotated energies of a moving Gaussian over the NLGT parameter."""
    grid = make_grid(config.grid)
    physics = config.physics
    state = HydroState.gaussian(
        grid, physics.sigma, p0=config.state.p0, hbar=physics.hbar, mass=physics.mass
    )
    rows = ordered_parallel_map(
        partial(_sweep_row, state),
        config.alphas(),
        max_workers=max_workers,
        progress=progress,
        desc="nlgt-sweep",
    )

    bound = physics.hbar**2 / 4.0
    failures = []
    for alpha_r, _, _, product, rhs, h_rot, h_dir, k_rot, k_dir, born in rows:
        if product < bound - HEISENBERG_SLACK:
            failures.append(f"uncertainty product {product!r} below hbar^2/4 at alpha={alpha_r}")
        if _relative(product, rhs) > CLOSED_FORM_TOLERANCE:
            failures.append(f"product {product!r} misses closed form {rhs!r} at alpha={alpha_r}")
        if max(_relative(h_rot, h_dir), _relative(k_rot, k_dir)) > CLOSED_FORM_TOLERANCE:
            failures.append(f"rotated energies disagree with direct integrals at alpha={alpha_r}")
        if born > BORN_TOLERANCE:
            failures.append(f"Born residual {born:.3g} at alpha={alpha_r}")
    return ExperimentRecord(SWEEP_COLUMNS, rows, failures)


def _grid_t_step(state, delta):
    psi = step_schrodinger(to_wavefunction(state), delta, state.hbar, state.mass)
    return from_wavefunction(psi, state.hbar, state.mass)


def _grid_tau_step(state, delta):
    return from_bridge_pair(tau_step(to_bridge_pair(state), delta), normalize=True)


def run_curvature(config, progress=False, max_workers=None):
    """Mixed t/tau difference of the Fisher length, exact Gaussian flows against the grid.

    delta starts at schedule.dtau and halves for each further sample; both
    steps use the same delta.
    """
    grid = make_grid(config.grid)
    physics = config.physics
    gaussian = GaussianState(
        0.0, physics.sigma, 0.0, config.state.p0, physics.hbar, physics.mass
    )
    state = gaussian.to_hydro(grid)
    target = fisher_curvature(physics.sigma, physics.hbar, physics.mass)
    printed = printed_fisher_curvature(physics.sigma, physics.hbar, physics.mass)

    deltas = [config.schedule.dtau / 2.0**i for i in range(config.schedule.n_samples)]
    rows, failures = [], []
    previous = None
    for delta in tqdm(deltas, disable=not progress):
        exact = gaussian_mixed_difference(gaussian, delta, delta)
        numeric = mixed_difference(
            state, delta, delta, _grid_t_step, _grid_tau_step, fisher_length2
        )
        extrapolated = exact if previous is None else richardson(previous, exact)
        previous = exact
        rows.append((delta, exact, numeric, target, printed, extrapolated))
        if abs(exact - target) > CURVATURE_TOLERANCE * abs(target):
            failures.append(f"exact estimate {exact!r} at delta={delta} misses {target!r}")
        if abs(numeric - exact) > CURVATURE_TOLERANCE * abs(exact):
            failures.append(f"grid estimate {numeric!r} at delta={delta} misses {exact!r}")
    logger.info("curvature limit %r, printed closed form %r", target, printed)
    return ExperimentRecord(CURVATURE_COLUMNS, rows, failures)


def check_state_parameters(n_states, seed):
    """Random test states: every fifth a single Gaussian, the rest 2-4 component mixtures.

    Actions are s = (c1 x + c2 x**2) exp(-x**2 / 8).
    """
    rng = np.random.default_rng(seed)
    states = []
    for index in range(n_states):
        n_components = 1 if index % 5 == 0 else int(rng.integers(2, 5))
        weights = rng.uniform(0.2, 1.0, n_components)
        states.append(
            {
                "weights": weights / weights.sum(),
                "variances": rng.uniform(0.5, 2.0, n_components),
                "centers": rng.uniform(-2.0, 2.0, n_components),
                "c1": float(rng.uniform(-1.0, 1.0)),
                "c2": float(rng.uniform(-0.5, 0.5)),
            }
        )
    return states


def check_state(grid, params, hbar, mass):
    """HydroState of one set of check_state_parameters."""
    x = grid.points
    rho = np.zeros(grid.n)
    for w, v, c in zip(params["weights"], params["variances"], params["centers"]):
        rho += w * np.exp(-((x - c) ** 2) / (2.0 * v)) / np.sqrt(2.0 * np.pi * v)
    s = (params["c1"] * x + params["c2"] * x**2) * np.exp(-(x**2) / 8.0)
    return HydroState.from_arrays(grid, rho, s, hbar, mass)


def _verdict(margin):
    return "pass" if margin >= 0 else "fail"


def _check_rows(job):
    """(invariant, status, margin, n_inconclusive) rows for one test state.

    Margins are positive when the invariant holds: tolerance minus deviation
    for agreements, value minus bound for inequalities.
    """
    index, params, config = job
    grid = make_grid(config.grid)
    hbar, mass = config.physics.hbar, config.physics.mass
    state = check_state(grid, params, hbar, mass)
    alphas = config.alphas()
    rows = []

    def add(name, margin, status=None, inconclusive=0):
        rows.append((index, name, status or _verdict(margin), float(margin), inconclusive))

    products, closed, paths, closed_rotation, born, power = [], [], [], [], [], []
    base = energies(state, check=False)
    for alpha_r in alphas:
        _, _, product = heisenberg_product(state, alpha_r, check=False)
        products.append(product)
        closed.append(_relative(product, heisenberg_rhs(state, alpha_r)))
        (h_rot, k_rot), (h_dir, k_dir) = rotated_energy_paths(state, alpha_r)
        paths.append(max(_relative(h_rot, h_dir), _relative(k_rot, k_dir)))
        shrink = np.exp(-2.0 * alpha_r)
        closed_rotation.append(
            max(
                _relative(h_dir, shrink * base.t_kin + base.q_bohm),
                _relative(k_dir, shrink * base.t_kin - base.q_bohm),
            )
        )
        born.append(born_residual(state, alpha_r))
        power.append(
            float(
                np.max(
                    np.abs(
                        nlgt_wavefunction(state, alpha_r).values
                        - nlgt_wavefunction(state, alpha_r, method="power").values
                    )
                )
            )
        )

    add("heisenberg", min(products) - hbar**2 / 4.0 + HEISENBERG_SLACK)
    add("heisenberg_closed_form", CLOSED_FORM_TOLERANCE - max(closed))
    add("rotation_paths", CLOSED_FORM_TOLERANCE - max(paths))
    add("rotation_closed_form", ROTATION_TOLERANCE - max(closed_rotation))
    add("born", BORN_TOLERANCE - max(born))
    add("nlgt_power_form", CLOSED_FORM_TOLERANCE - max(power))

    add("cramer_rao", base.d2_x - base.fisher_len2 + HEISENBERG_SLACK)
    if len(params["weights"]) == 1:
        add(
            "cramer_rao_equality",
            CRAMER_RAO_TOLERANCE - _relative(base.d2_x, base.fisher_len2),
        )

    k_value = k_from_imaginary_nlgt(state, check=False)
    add("k_imaginary", K_TOLERANCE - _relative(k_value, base.k_like))

    psi0 = to_wavefunction(state)
    psi_t = propagate(psi0, config.schedule.t, config.schedule.dt, hbar, mass)
    energy0 = wavefunction_energy(psi0, hbar, mass)
    drift = abs(wavefunction_energy(psi_t, hbar, mass) - energy0)
    add("energy_conservation", ENERGY_TOLERANCE * max(1.0, energy0) - drift)

    rho0 = state.rho.values
    rho1 = np.abs(psi_t.values) ** 2
    marginals = []
    for rho in (rho0, rho1):
        rho = np.maximum(rho, MARGINAL_CLIP * rho.max())
        marginals.append(RealField(grid, rho / grid.integrate(rho)))
    problem = BridgeProblem(grid, marginals[0], marginals[1], config.schedule.tau, hbar, mass)
    solution = solve_schrodinger_system(problem, config.solver.tol, config.solver.max_iter)
    taus = np.linspace(0.0, config.schedule.tau, SIGN_SAMPLES + 2)[1:-1]
    samples = sign_property_samples(solution, taus, config.schedule.dtau)
    conclusive = [s for s in samples if s.status != "inconclusive"]
    n_inconclusive = len(samples) - len(conclusive)
    if conclusive:
        margin = min(-s.d_fisher * s.d_sigma2_p for s in conclusive)
        status = "fail" if any(s.status == "fail" for s in conclusive) else "pass"
    else:
        margin, status = 0.0, "inconclusive"
    add("sign_property", margin, status, n_inconclusive)
    return rows


def run_check(config, progress=False, max_workers=None):
    """Invariant suite over schedule.n_samples random states drawn from the config seed."""
    params = check_state_parameters(config.schedule.n_samples, config.seed)
    jobs = [(index, p, config) for index, p in enumerate(params)]
    per_state = ordered_parallel_map(
        _check_rows, jobs, max_workers=max_workers, progress=progress, desc="check"
    )
    rows = [row for state_rows in per_state for row in state_rows]
    failures = [
        f"state {index}: {name} (margin {margin:.3g})"
        for index, name, status, margin, _ in rows
        if status == "fail"
    ]
    logger.info("check: %d rows, %d failures", len(rows), len(failures))
    return ExperimentRecord(CHECK_COLUMNS, rows, failures)


RUNNERS = {
    "propagate": run_propagate,
    "bridge": run_bridge,
    "collapse": run_collapse,
    "nlgt-sweep": run_nlgt_sweep,
    "curvature": run_curvature,
    "check": run_check,
}


def run_experiment(config, progress=False, max_workers=None):
    """Dispatch to the runner named by config.experiment."""
    logger.info("running %s", config.experiment)
    return RUNNERS[config.experiment](config, progress=progress, max_workers=max_workers)
