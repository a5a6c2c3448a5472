"""Semi-implicit step of the Galerkin-projected momentum equation.

The viscous term is implicit with the lagged viscosity field, advection
enters as an exactly skew-symmetric matrix built from the previous
velocity, and the mass matrix is averaged between the old and new
density so the discrete kinetic energy can never increase:

    [ (M_new + M_old)/2 + dt (A + B) ] c_new = M_old c_old.

Testing with c_new and using the parallelogram identity for M_old gives

    E_new - E_old = -dt c_new^T A c_new - (1/2) dc^T M_old dc <= 0

with no residual density-change term, which is the discrete counterpart
of the kinetic energy identity of the continuous construction.
"""

from __future__ import annotations

import numpy as np

from .basis import (StreamBasis, assemble_advection_matrix, assemble_viscous,
                    assemble_weighted_gram, reconstruct_velocity)
from .coefficients import ViscosityLaw, eval_viscosity
from .errors import SchemeError, StepError
from .grid import ScalarField

ENERGY_TOL = 1e-12


def kinetic_energy(coeffs: np.ndarray, mass: np.ndarray) -> float:
    return 0.5 * float(coeffs @ mass @ coeffs)


def step_momentum(coeffs_old: np.ndarray, rho_old: ScalarField,
                  rho_new: ScalarField, theta: ScalarField,
                  basis: StreamBasis, dt: float, eps: float,
                  law: ViscosityLaw) -> np.ndarray:
    """Advance the Galerkin coefficients by one step of size dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if rho_old.min() <= 0 or rho_new.min() <= 0:
        raise ValueError("density must be bounded away from zero")
    mu = ScalarField(theta.grid, np.asarray(eval_viscosity(law, theta.values)))
    if eps < 0 or (eps == 0.0 and mu.min() <= 0.0):
        raise ValueError("need eps > 0 or a strictly positive viscosity field")

    M_old = assemble_weighted_gram(basis, rho_old)
    M_new = assemble_weighted_gram(basis, rho_new)
    A = assemble_viscous(basis, mu, eps)
    u_old = reconstruct_velocity(basis, coeffs_old)
    B = assemble_advection_matrix(basis, rho_old, u_old)

    system = 0.5 * (M_new + M_old) + dt * (A + B)
    try:
        coeffs_new = np.linalg.solve(system, M_old @ coeffs_old)
    except np.linalg.LinAlgError as exc:
        raise StepError(f"momentum system is singular: {exc}") from exc

    e_old = kinetic_energy(coeffs_old, M_old)
    e_new = kinetic_energy(coeffs_new, M_new)
    if e_new > e_old * (1.0 + ENERGY_TOL) + 1e-300:
        raise SchemeError(
            f"kinetic energy increased: {e_old!r} -> {e_new!r}")
    return coeffs_new
