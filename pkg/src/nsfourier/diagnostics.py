"""Per-step and per-run verification of the analytical inequalities.

Everything here is read-only over a computed trajectory: the total
energy budget, the renormalized temperature inequality against a
separable test-function family, and the a priori bound monitors.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .coefficients import (RenormFunction, check_h_admissible,
                           eval_conductivity, eval_H, eval_K_h, eval_viscosity)
from .grid import ScalarField, grad_values, integrate_values
from .state import Trajectory
from .thermal import dissipation_field

ENERGY_SLACK_FACTOR = 1e-10

CSV_COLUMNS = [
    "time", "kinetic_energy", "thermal_energy",
    "cum_dissipation", "cum_eps_dissipation", "cum_sink",
    "rho_min", "rho_max", "theta_min", "theta_max",
    "u_H1", "theta_H1", "theta_L3", "energy_slack",
]


@dataclass
class DiagnosticsRecord:
    time: float
    kinetic_energy: float
    thermal_energy: float
    cum_dissipation: float
    cum_eps_dissipation: float
    cum_sink: float
    rho_min: float
    rho_max: float
    theta_min: float
    theta_max: float
    u_H1: float
    theta_H1: float
    theta_L3: float
    energy_slack: float

    def row(self) -> str:
        return ",".join(repr(getattr(self, c)) for c in CSV_COLUMNS)


def write_diagnostics_csv(records, target) -> None:
    """Fixed column order, one row per step; byte-deterministic."""
    own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
    fh = open(target, "w") if own else target
    try:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            fh.write(rec.row() + "\n")
    finally:
        if own:
            fh.close()


def diagnostics_csv_text(records) -> str:
    buf = io.StringIO()
    write_diagnostics_csv(records, buf)
    return buf.getvalue()


def energy_report(state, delta: float, basis, laws) -> dict:
    """Pointwise energies and norms of one state."""
    grid = state.rho.grid
    u = state.velocity(basis)
    speed2 = u.u ** 2 + u.v ** 2
    grad2 = u.du_dx ** 2 + u.du_dy ** 2 + u.dv_dx ** 2 + u.dv_dy ** 2
    tgx, tgy = grad_values(grid, state.theta.values)
    return {
        "kinetic_energy": 0.5 * integrate_values(grid, state.rho.values * speed2),
        "thermal_energy": integrate_values(grid, (delta + state.rho.values) * state.theta.values),
        "rho_min": state.rho.min(),
        "rho_max": state.rho.max(),
        "theta_min": state.theta.min(),
        "theta_max": state.theta.max(),
        "u_H1": float(np.sqrt(max(integrate_values(grid, speed2 + grad2), 0.0))),
        "theta_H1": float(np.sqrt(max(
            integrate_values(grid, state.theta.values ** 2 + tgx ** 2 + tgy ** 2), 0.0))),
        "theta_L3": integrate_values(grid, state.theta.values ** 3) ** (1.0 / 3.0),
    }


def step_sinks(traj: Trajectory, m: int) -> dict:
    """Dissipation/sink integrals of step m -> m+1, matching the scheme's
    own quadrature (viscosity lagged at theta_m, fields at t_{m+1})."""
    grid = traj.grid
    old, new = traj.states[m], traj.states[m + 1]
    dt = new.t - old.t
    u1 = new.velocity(traj.basis)
    mu_old = ScalarField(grid, np.asarray(eval_viscosity(traj.laws.viscosity,
                                                         old.theta.values)))
    diss = integrate_values(grid, dissipation_field(mu_old, u1).values)
    grad2 = u1.du_dx ** 2 + u1.du_dy ** 2 + u1.dv_dx ** 2 + u1.dv_dy ** 2
    return {
        "dissipation": dt * diss,
        "eps_dissipation": dt * traj.eps * integrate_values(grid, grad2),
        "sink": dt * traj.delta * integrate_values(grid, new.theta.values ** 3),
        "delta_dissipation": dt * traj.delta * diss,
    }


def check_energy_inequality(traj: Trajectory, delta: float, eps: float) -> dict:
    """Total energy inequality per step:

        E(t_{m+1}) + dt [ eps |grad u|^2 + delta theta^3 + delta S:grad u ]
            <= E(t_m) + threshold.
    """
    if not traj.states:
        raise ValueError("empty trajectory")
    energies = [energy_report(s, delta, traj.basis, traj.laws) for s in traj.states]
    totals = [e["kinetic_energy"] + e["thermal_energy"] for e in energies]
    worst = -np.inf
    worst_step = -1
    for m in range(len(traj.states) - 1):
        sinks = step_sinks(traj, m)
        violation = (totals[m + 1] + sinks["eps_dissipation"] + sinks["sink"]
                     + sinks["delta_dissipation"] - totals[m])
        if violation > worst:
            worst = violation
            worst_step = m
    threshold = ENERGY_SLACK_FACTOR * totals[0]
    return {
        "max_violation": float(worst),
        "worst_step": worst_step,
        "threshold": threshold,
        "passes": bool(worst <= threshold),
    }


class SeparableTestFunction:
    """phi(t, x) = psi(t) chi(x) with psi(T) = 0, phi >= 0 and flat walls."""

    def __init__(self, grid, T, time_power=1, amp=0.5, kx=1, ky=1):
        if not (0 <= amp < 1):
            raise ValueError("amp must lie in [0, 1) to keep phi non-negative")
        self.grid = grid
        self.T = T
        self.time_power = time_power
        self.amp = amp
        self.kx = kx
        self.ky = ky
        X, Y = grid.nodes()
        cx = np.cos(kx * np.pi * X / grid.Lx)
        cy = np.cos(ky * np.pi * Y / grid.Ly)
        self.chi = 1.0 + amp * cx * cy
        self.grad_chi = (
            -amp * (kx * np.pi / grid.Lx) * np.sin(kx * np.pi * X / grid.Lx) * cy,
            -amp * (ky * np.pi / grid.Ly) * cx * np.sin(ky * np.pi * Y / grid.Ly),
        )
        self.lap_chi = -amp * ((kx * np.pi / grid.Lx) ** 2
                               + (ky * np.pi / grid.Ly) ** 2) * cx * cy

    def psi(self, t: float) -> float:
        if self.T == 0:
            return 0.0
        return max(1.0 - t / self.T, 0.0) ** self.time_power

    def at(self, t: float) -> np.ndarray:
        return self.psi(t) * self.chi


def renorm_report(traj: Trajectory, h: RenormFunction, phi, delta: float,
                  laws) -> dict:
    """Signed residual LHS - RHS of the renormalized temperature
    inequality for test function phi; certified when residual <= tol with
    tol = 1e-6 * (scale of the largest term).

    Time quadrature is aligned with the backward-Euler stepping (flux,
    source and sink terms at the right endpoint), so the residual
    measures genuine inequality defect rather than quadrature mismatch.
    """
    if h.dh is None:
        raise ValueError("renorm function needs derivative data")
    theta_max = max(s.theta.max() for s in traj.states)
    adm = check_h_admissible(h, max(theta_max, 1.0), 200)
    if not adm["passes"]:
        raise ValueError("renorm function fails the admissibility conditions")
    T = traj.states[-1].t
    if abs(phi.psi(T)) > 1e-14:
        raise ValueError("test function must vanish at the final time")

    grid = traj.grid
    law = laws.conductivity
    t1 = t2 = t3 = t4 = r1 = r2 = 0.0
    for m in range(len(traj.states) - 1):
        old, new = traj.states[m], traj.states[m + 1]
        dt = new.t - old.t
        H_old = np.asarray(eval_H(h, old.theta.values))
        a_old = delta + old.rho.values
        dphi = phi.at(new.t) - phi.at(old.t)
        t1 += integrate_values(grid, a_old * H_old * dphi)

        psi1 = phi.psi(new.t)
        u1 = new.velocity(traj.basis)
        H_new = np.asarray(eval_H(h, new.theta.values))
        conv = u1.u * phi.grad_chi[0] + u1.v * phi.grad_chi[1]
        t2 += dt * psi1 * integrate_values(grid, new.rho.values * H_new * conv)

        Kh_new = np.asarray(eval_K_h(h, law, new.theta.values))
        t3 += dt * psi1 * integrate_values(grid, Kh_new * phi.lap_chi)

        hv_new = np.asarray(h.h(new.theta.values))
        t4 -= dt * psi1 * integrate_values(
            grid, delta * new.theta.values ** 3 * hv_new * phi.chi)

        mu_old = ScalarField(grid, np.asarray(eval_viscosity(traj.laws.viscosity,
                                                             old.theta.values)))
        diss = dissipation_field(mu_old, u1).values
        r1 += dt * psi1 * integrate_values(
            grid, (delta - 1.0) * diss * hv_new * phi.chi)

        tgx, tgy = grad_values(grid, new.theta.values)
        kap = np.asarray(eval_conductivity(law, new.theta.values))
        dh_new = np.asarray(h.dh(new.theta.values))
        r2 += dt * psi1 * integrate_values(
            grid, dh_new * kap * (tgx ** 2 + tgy ** 2) * phi.chi)

    init = traj.states[0]
    H0 = np.asarray(eval_H(h, init.theta.values))
    r3 = -integrate_values(grid, (delta + init.rho.values) * H0 * phi.at(init.t))

    lhs = t1 + t2 + t3 + t4
    rhs = r1 + r2 + r3
    terms = {"time": t1, "advection": t2, "diffusion": t3, "sink": t4,
             "source": r1, "gradient": r2, "initial": r3}
    scale = max(abs(v) for v in terms.values())
    residual = lhs - rhs
    tol = 1e-6 * scale
    return {"residual": residual, "scale": scale, "tol": tol,
            "passes": bool(residual <= tol), "terms": terms}


def renorm_residual(traj: Trajectory, h: RenormFunction, phi, delta: float,
                    laws) -> float:
    return renorm_report(traj, h, phi, delta, laws)["residual"]


def apriori_monitor(traj: Trajectory, l_values=(1.0, 0.5), omega: float = 0.1) -> dict:
    """Maxima over the run of the a priori bound quantities."""
    if not traj.states:
        raise ValueError("empty trajectory")
    grid = traj.grid
    times = traj.times
    u_h1_sq, th_h1_sq, th_l3, pow_sq, sink_dense = [], [], [], [], []
    rho_linf = 0.0
    sqrt_rho_u = 0.0
    rho_theta_l1 = 0.0
    for s in traj.states:
        u = s.velocity(traj.basis)
        speed2 = u.u ** 2 + u.v ** 2
        grad2 = u.du_dx ** 2 + u.du_dy ** 2 + u.dv_dx ** 2 + u.dv_dy ** 2
        tgx, tgy = grad_values(grid, s.theta.values)
        rho_linf = max(rho_linf, s.rho.max())
        sqrt_rho_u = max(sqrt_rho_u,
                         np.sqrt(max(integrate_values(grid, s.rho.values * speed2), 0.0)))
        rho_theta_l1 = max(rho_theta_l1,
                           integrate_values(grid, s.rho.values * s.theta.values))
        u_h1_sq.append(integrate_values(grid, speed2 + grad2))
        th_h1_sq.append(integrate_values(grid, s.theta.values ** 2 + tgx ** 2 + tgy ** 2))
        th_l3.append(integrate_values(grid, s.theta.values ** 3))
        row = []
        for l in l_values:
            p = 0.5 * (3.0 - l)
            tp = s.theta.values ** p
            pgx, pgy = grad_values(grid, tp)
            row.append(integrate_values(grid, tp ** 2 + pgx ** 2 + pgy ** 2))
        pow_sq.append(row)
        sink_dense.append(integrate_values(
            grid, s.theta.values ** 3 * (s.rho.values >= omega)))

    def time_l2(series):
        return float(np.sqrt(max(np.trapezoid(series, times), 0.0)))

    out = {
        "rho_Linf": rho_linf,
        "u_L2H1": time_l2(u_h1_sq),
        "theta_L2H1": time_l2(th_h1_sq),
        "theta_L3_spacetime": float(np.trapezoid(th_l3, times)) ** (1.0 / 3.0),
        "sqrt_rho_u_LinfL2": sqrt_rho_u,
        "rho_theta_LinfL1": rho_theta_l1,
        "sink_on_dense_set": float(np.trapezoid(sink_dense, times)),
    }
    pow_sq = np.array(pow_sq)
    for i, l in enumerate(l_values):
        out[f"theta_pow_L2H1_l={l:g}"] = time_l2(pow_sq[:, i])
    return out
