"""Fixed-point coupling of the transport, momentum and temperature
sub-solvers, the outer time loop, and the continuation sweep driver.

Each time step runs a Picard iteration: the density is advected with the
current velocity iterate, the momentum system is re-solved with that
density, and the loop repeats until the Galerkin coefficients stop
moving.  The temperature step closes the step once, after convergence,
because the momentum step sees only the previous step's temperature
through the lagged viscosity; re-running it inside the loop would change
nothing.  On step failure the driver halves dt and retries, up to five
halvings.
"""

from __future__ import annotations

import numpy as np

from .basis import StreamBasis, build_basis, reconstruct_velocity
from .coefficients import eval_viscosity
from .config import RunConfig
from .diagnostics import DiagnosticsRecord, energy_report, step_sinks
from .errors import RunError, SolverError, StepError
from .grid import Grid, ScalarField, integrate_values
from .momentum import step_momentum
from .state import FluidState, Trajectory
from .thermal import ThermalStepParams, dissipation_field, step_temperature
from .transport import advect_density

MAX_DT_HALVINGS = 5


def build_grid(config: RunConfig) -> Grid:
    return Grid(nx=config.nx, ny=config.ny, Lx=config.Lx, Ly=config.Ly)


def initial_state(config: RunConfig, grid: Grid, basis: StreamBasis) -> FluidState:
    """Initial fields: single-cosine bumps for density and temperature,
    one stream-function mode for the momentum."""
    X, Y = grid.nodes()
    bump = np.cos(np.pi * X / grid.Lx) * np.cos(np.pi * Y / grid.Ly)
    rho0 = ScalarField(grid, config.rho_base + config.rho_amp * bump)
    theta0 = ScalarField(grid, config.theta_base + config.theta_amp * bump)
    if rho0.min() < config.delta or rho0.max() > config.rho_bar:
        raise ValueError("initial density violates its stated bounds")
    if theta0.min() < config.theta_floor:
        raise ValueError("initial temperature dips below theta_floor")
    coeffs = np.zeros(basis.n_modes)
    coeffs[config.m0_mode - 1] = config.m0_amplitude
    return FluidState(rho=rho0, coeffs=coeffs, theta=theta0, t=0.0)


def fixed_point_step(state: FluidState, config: RunConfig,
                     basis: StreamBasis, dt: float | None = None,
                     history_out: list | None = None) -> FluidState:
    """One converged time step of size dt (default config.dt).

    If history_out is a list, the relative coefficient change of each
    sweep is appended to it for contraction monitoring."""
    if dt is None:
        dt = config.dt
    grid = state.rho.grid
    laws = config.laws()
    mu_old = ScalarField(grid, np.asarray(
        eval_viscosity(laws.viscosity, state.theta.values)))

    coeffs_k = state.coeffs
    rho_new = state.rho
    history = []
    converged = False
    for _ in range(config.picard_max):
        u_k = reconstruct_velocity(basis, coeffs_k)
        if u_k.max_speed() > 0.0:
            rho_new = advect_density(state.rho, u_k, dt)
        else:
            rho_new = state.rho.copy()
        coeffs_new = step_momentum(state.coeffs, state.rho, rho_new,
                                   state.theta, basis, dt, config.eps,
                                   laws.viscosity)
        scale = max(float(np.linalg.norm(coeffs_new)),
                    float(np.linalg.norm(coeffs_k)), 1e-300)
        change = float(np.linalg.norm(coeffs_new - coeffs_k)) / scale
        history.append(change)
        if history_out is not None:
            history_out.append(change)
        coeffs_k = coeffs_new
        if change <= config.picard_tol:
            converged = True
            break
    if not converged:
        raise StepError(
            f"fixed-point iteration did not converge in {config.picard_max} "
            f"sweeps (last change {history[-1]:.3g})", history=history)

    u_new = reconstruct_velocity(basis, coeffs_k)
    diss = dissipation_field(mu_old, u_new)
    params = ThermalStepParams(dt=dt, delta=config.delta)
    theta_new = step_temperature(state.theta, rho_new, state.rho, u_new,
                                 diss, params, laws)
    return FluidState(rho=rho_new, coeffs=coeffs_k, theta=theta_new,
                      t=state.t + dt)


def _advance(state: FluidState, config: RunConfig, basis: StreamBasis,
             dt: float, depth: int = 0) -> list:
    """Advance by dt, halving on failure; returns the substep states."""
    try:
        return [fixed_point_step(state, config, basis, dt)]
    except (StepError, SolverError) as exc:
        if depth >= MAX_DT_HALVINGS or not isinstance(exc, StepError):
            raise
        half = 0.5 * dt
        first = _advance(state, config, basis, half, depth + 1)
        second = _advance(first[-1], config, basis, half, depth + 1)
        return first + second


def _record(traj: Trajectory, config: RunConfig,
            prev_record: DiagnosticsRecord | None) -> DiagnosticsRecord:
    """Diagnostics for the most recently appended state."""
    state = traj.final
    rep = energy_report(state, config.delta, traj.basis, traj.laws)
    if prev_record is None:
        cum_diss = cum_eps = cum_sink = 0.0
        slack = 0.0
    else:
        m = len(traj.states) - 2
        sinks = step_sinks(traj, m)
        cum_diss = prev_record.cum_dissipation + sinks["dissipation"]
        cum_eps = prev_record.cum_eps_dissipation + sinks["eps_dissipation"]
        cum_sink = prev_record.cum_sink + sinks["sink"]
        prev_total = prev_record.kinetic_energy + prev_record.thermal_energy
        slack = (rep["kinetic_energy"] + rep["thermal_energy"]
                 + sinks["eps_dissipation"] + sinks["sink"]
                 + sinks["delta_dissipation"] - prev_total)
    return DiagnosticsRecord(
        time=state.t,
        kinetic_energy=rep["kinetic_energy"],
        thermal_energy=rep["thermal_energy"],
        cum_dissipation=cum_diss,
        cum_eps_dissipation=cum_eps,
        cum_sink=cum_sink,
        rho_min=rep["rho_min"], rho_max=rep["rho_max"],
        theta_min=rep["theta_min"], theta_max=rep["theta_max"],
        u_H1=rep["u_H1"], theta_H1=rep["theta_H1"],
        theta_L3=rep["theta_L3"], energy_slack=slack,
    )


def run_simulation(config: RunConfig) -> Trajectory:
    problems = config.validate()
    if problems:
        raise ValueError("; ".join(problems))
    grid = build_grid(config)
    basis = build_basis(grid, config.n_modes)
    laws = config.laws()
    traj = Trajectory(grid=grid, basis=basis, laws=laws,
                      eps=config.eps, delta=config.delta)
    state = initial_state(config, grid, basis)
    traj.append(state)
    traj.records.append(_record(traj, config, None))

    rho_lo, rho_hi = state.rho.min(), state.rho.max()
    e0 = traj.records[0].kinetic_energy + traj.records[0].thermal_energy
    while state.t < config.t_final - 1e-12 * max(config.t_final, 1.0):
        dt = min(config.dt, config.t_final - state.t)
        try:
            substeps = _advance(state, config, basis, dt)
        except SolverError as exc:
            raise RunError(f"step from t = {state.t!r} failed: {exc}",
                           partial_trajectory=traj) from exc
        for sub in substeps:
            traj.append(sub)
            traj.records.append(_record(traj, config, traj.records[-1]))
            if sub.rho.min() < rho_lo - 1e-12 or sub.rho.max() > rho_hi + 1e-12:
                raise RunError("density left its initial bounds",
                               partial_trajectory=traj)
            if traj.records[-1].energy_slack > 1e-10 * e0:
                raise RunError(
                    f"energy inequality violated at t = {sub.t!r} "
                    f"(slack {traj.records[-1].energy_slack!r})",
                    partial_trajectory=traj)
        state = traj.final
    return traj


def _field_l2_difference(traj_a: Trajectory, traj_b: Trajectory,
                         n_samples: int = 33) -> dict:
    """Space-time L2 differences of u and theta on common time samples.

    Fields are interpolated linearly in time; basis coefficients of
    different sizes compare through the reconstructed nodal velocities.
    """
    grid = traj_a.grid
    if traj_b.grid != grid:
        raise ValueError("trajectories must share a grid")
    T = min(traj_a.final.t, traj_b.final.t)
    samples = np.linspace(0.0, T, n_samples)

    def at(traj, t):
        times = traj.times
        i = int(np.searchsorted(times, t, side="right") - 1)
        i = min(max(i, 0), len(times) - 2) if len(times) > 1 else 0
        if len(times) == 1:
            s = traj.states[0]
            u = s.velocity(traj.basis)
            return u.u, u.v, s.theta.values
        w = (t - times[i]) / (times[i + 1] - times[i])
        w = min(max(w, 0.0), 1.0)
        s0, s1 = traj.states[i], traj.states[i + 1]
        u0, u1 = s0.velocity(traj.basis), s1.velocity(traj.basis)
        return ((1 - w) * u0.u + w * u1.u,
                (1 - w) * u0.v + w * u1.v,
                (1 - w) * s0.theta.values + w * s1.theta.values)

    du_sq, dth_sq = [], []
    for t in samples:
        ua, va, tha = at(traj_a, t)
        ub, vb, thb = at(traj_b, t)
        du_sq.append(integrate_values(grid, (ua - ub) ** 2 + (va - vb) ** 2))
        dth_sq.append(integrate_values(grid, (tha - thb) ** 2))
    return {
        "u": float(np.sqrt(max(np.trapezoid(du_sq, samples), 0.0))),
        "theta": float(np.sqrt(max(np.trapezoid(dth_sq, samples), 0.0))),
    }


def continuation_sweep(base_config: RunConfig, schedule) -> dict:
    """Run the schedule of (n_modes, eps, delta) overrides and report the
    successive Cauchy differences; a failed run truncates the report."""
    from dataclasses import replace

    from .diagnostics import apriori_monitor

    if not schedule:
        raise ValueError("schedule must be non-empty")
    runs = []
    configs = []
    error = None
    for n, eps, delta in schedule:
        cfg = replace(base_config, n_modes=int(n), eps=float(eps),
                      delta=float(delta))
        configs.append(cfg)
        try:
            runs.append(run_simulation(cfg))
        except (RunError, SolverError) as exc:
            error = str(exc)
            break

    differences = []
    for a, b in zip(runs, runs[1:]):
        differences.append(_field_l2_difference(a, b))
    monitors = [apriori_monitor(traj) for traj in runs]
    bands = {}
    if monitors:
        for key in monitors[0]:
            vals = [m[key] for m in monitors]
            lo, hi = min(vals), max(vals)
            bands[key] = hi / lo if lo > 0 else (1.0 if hi == 0 else float("inf"))
    flags = {
        "u_decreasing": all(differences[i + 1]["u"] < differences[i]["u"]
                            for i in range(len(differences) - 1)),
        "theta_decreasing": all(
            differences[i + 1]["theta"] < differences[i]["theta"]
            for i in range(len(differences) - 1)),
    }
    return {
        "schedule": list(schedule),
        "completed": len(runs),
        "differences": differences,
        "monitors": monitors,
        "band_ratios": bands,
        "flags": flags,
        "error": error,
        "trajectories": runs,
    }
