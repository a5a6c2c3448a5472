"""Divergence-free no-slip velocity basis from clamped stream functions.

Each mode is u = curl(psi) with psi(x, y) = X_p(x) Y_q(y) and

    X_p(x) = cos((p-1) pi x / Lx) - cos((p+1) pi x / Lx),

which vanishes together with its derivative at both walls, so every
reconstructed velocity is exactly divergence free and exactly zero on
the boundary.  Modes are ordered by total wavenumber p+q with x-major
tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError
from .grid import Grid, ScalarField, VectorField

__all__ = [
    "StreamBasis",
    "build_basis",
    "reconstruct_velocity",
    "assemble_weighted_gram",
    "assemble_viscous",
    "assemble_advection",
    "assemble_advection_matrix",
    "project_initial",
]


def _clamped_profile(p: int, s: np.ndarray, L: float):
    """X_p and its first three derivatives on nodes s."""
    k1 = (p - 1) * np.pi / L
    k2 = (p + 1) * np.pi / L
    f = np.cos(k1 * s) - np.cos(k2 * s)
    d1 = -k1 * np.sin(k1 * s) + k2 * np.sin(k2 * s)
    d2 = -k1 ** 2 * np.cos(k1 * s) + k2 ** 2 * np.cos(k2 * s)
    d3 = k1 ** 3 * np.sin(k1 * s) - k2 ** 3 * np.sin(k2 * s)
    return f, d1, d2, d3


def mode_wavenumbers(n_modes: int) -> list[tuple[int, int]]:
    """First n_modes (p, q) pairs sorted by (p+q, p)."""
    pairs = [(p, q) for p in range(1, n_modes + 2) for q in range(1, n_modes + 2)]
    pairs.sort(key=lambda pq: (pq[0] + pq[1], pq[0]))
    return pairs[:n_modes]


@dataclass
class StreamBasis:
    grid: Grid
    n_modes: int
    wavenumbers: list = field(repr=False)
    eta: np.ndarray = field(repr=False)    # (n, 2, Nx, Ny)
    deta: np.ndarray = field(repr=False)   # (n, 2, 2, Nx, Ny); deta[j,a,b] = d_b eta_a

    def velocity_mode(self, j: int) -> VectorField:
        d = self.deta[j]
        return VectorField(self.grid, self.eta[j, 0], self.eta[j, 1],
                           d[0, 0], d[0, 1], d[1, 0], d[1, 1])


def build_basis(grid: Grid, n_modes: int) -> StreamBasis:
    if n_modes < 1:
        raise ValueError("need at least one mode")
    pairs = mode_wavenumbers(n_modes)
    p_max = max(p for p, _ in pairs)
    q_max = max(q for _, q in pairs)
    if p_max + 1 > grid.nx // 2 or q_max + 1 > grid.ny // 2:
        raise ResolutionError(
            f"mode ({p_max},{q_max}) not resolvable on a {grid.nx}x{grid.ny} grid")

    shape = grid.shape
    eta = np.empty((n_modes, 2) + shape)
    deta = np.empty((n_modes, 2, 2) + shape)
    for j, (p, q) in enumerate(pairs):
        X, dX, d2X, _ = _clamped_profile(p, grid.x, grid.Lx)
        Y, dY, d2Y, _ = _clamped_profile(q, grid.y, grid.Ly)
        # eta = (psi_y, -psi_x) with psi = X(x) Y(y)
        eta[j, 0] = np.outer(X, dY)
        eta[j, 1] = -np.outer(dX, Y)
        deta[j, 0, 0] = np.outer(dX, dY)
        deta[j, 0, 1] = np.outer(X, d2Y)
        deta[j, 1, 0] = -np.outer(d2X, Y)
        deta[j, 1, 1] = -np.outer(dX, dY)
    # the clamped profiles vanish on the walls analytically; pin the nodal
    # values to exact zero so no-slip is not limited by cosine round-off
    eta[:, :, 0, :] = 0.0
    eta[:, :, -1, :] = 0.0
    eta[:, :, :, 0] = 0.0
    eta[:, :, :, -1] = 0.0
    return StreamBasis(grid, n_modes, pairs, eta, deta)


def reconstruct_velocity(basis: StreamBasis, coeffs: np.ndarray,
                         grid: Grid | None = None) -> VectorField:
    """u = sum_j c_j eta_j with analytic gradients; linear in coeffs."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (basis.n_modes,):
        raise ValueError(f"expected {basis.n_modes} coefficients, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    g = grid or basis.grid
    vel = np.einsum("j,jaxy->axy", c, basis.eta)
    dvel = np.einsum("j,jabxy->abxy", c, basis.deta)
    return VectorField(g, vel[0], vel[1],
                       dvel[0, 0], dvel[0, 1], dvel[1, 0], dvel[1, 1])


def assemble_weighted_gram(basis: StreamBasis, rho: ScalarField) -> np.ndarray:
    """M_ij = int rho eta_i . eta_j dx; SPD whenever rho is bounded below."""
    if np.any(rho.values < 0):
        raise ValueError("rho must be non-negative for a definite mass matrix")
    w = basis.grid.quad_weights() * rho.values
    M = np.einsum("iaxy,jaxy,xy->ij", basis.eta, basis.eta, w)
    return 0.5 * (M + M.T)


def assemble_viscous(basis: StreamBasis, mu_field: ScalarField, eps: float) -> np.ndarray:
    """A_ij = int ( (mu/2) sym(grad eta_i) : sym(grad eta_j)
                    + eps grad eta_i : grad eta_j ) dx."""
    if np.any(mu_field.values < 0) or eps < 0:
        raise ValueError("viscosity field and eps must be non-negative")
    w = basis.grid.quad_weights()
    sym = basis.deta + np.swapaxes(basis.deta, 1, 2)
    A = np.einsum("iabxy,jabxy,xy->ij", sym, sym, 0.5 * w * mu_field.values)
    if eps > 0:
        A += eps * np.einsum("iabxy,jabxy,xy->ij", basis.deta, basis.deta, w)
    return 0.5 * (A + A.T)


def assemble_advection(basis: StreamBasis, rho: ScalarField,
                       u_field: VectorField) -> np.ndarray:
    """b_i = int (rho u (x) u) : grad eta_i dx."""
    w = basis.grid.quad_weights() * rho.values
    uu = np.stack([u_field.u, u_field.v])
    return np.einsum("axy,bxy,iabxy,xy->i", uu, uu, basis.deta, w)


def assemble_advection_matrix(basis: StreamBasis, rho: ScalarField,
                              u_field: VectorField) -> np.ndarray:
    """Skew-symmetric advection matrix for transport velocity u:

        B_ij = (1/2) int rho [ (u . grad) eta_j . eta_i
                               - (u . grad) eta_i . eta_j ] dx.

    Exact skew symmetry makes the advection energy-neutral for any
    coefficient vector it acts on.
    """
    w = basis.grid.quad_weights() * rho.values
    uu = np.stack([u_field.u, u_field.v])
    conv = np.einsum("bxy,jabxy->jaxy", uu, basis.deta)
    C = np.einsum("iaxy,jaxy,xy->ij", basis.eta, conv, w)
    return 0.5 * (C - C.T)


def project_initial(basis: StreamBasis, rho0: ScalarField,
                    m0: VectorField) -> np.ndarray:
    """Coefficients with int rho0 u . eta_i = int m0 . eta_i for all i."""
    if rho0.min() <= 0:
        raise ValueError("rho0 must be bounded away from zero")
    M = assemble_weighted_gram(basis, rho0)
    w = basis.grid.quad_weights()
    mm = np.stack([m0.u, m0.v])
    r = np.einsum("axy,iaxy,xy->i", mm, basis.eta, w)
    try:
        return np.linalg.solve(M, r)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"weighted Gram matrix is singular: {exc}") from exc
