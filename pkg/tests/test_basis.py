import numpy as np
import pytest

from nsfourier.basis import (assemble_advection, assemble_advection_matrix,
                             assemble_viscous, assemble_weighted_gram,
                             build_basis, mode_wavenumbers, project_initial,
                             reconstruct_velocity)
from nsfourier.errors import ResolutionError
from nsfourier.grid import Grid, ScalarField, integrate_values


@pytest.fixture(scope="module")
def grid():
    return Grid(nx=64, ny=64)


@pytest.fixture(scope="module")
def basis(grid):
    return build_basis(grid, 16)


def test_mode_ordering_deterministic():
    pairs = mode_wavenumbers(6)
    assert pairs == [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1)]


def test_too_many_modes_rejected():
    with pytest.raises(ResolutionError):
        build_basis(Grid(nx=8, ny=8), 16)


def test_modes_vanish_on_walls(basis):
    for j in range(basis.n_modes):
        for comp in (basis.eta[j, 0], basis.eta[j, 1]):
            assert np.max(np.abs(comp[0, :])) == 0.0
            assert np.max(np.abs(comp[-1, :])) == 0.0
            assert np.max(np.abs(comp[:, 0])) == 0.0
            assert np.max(np.abs(comp[:, -1])) == 0.0


def test_reconstruct_zero(basis):
    u = reconstruct_velocity(basis, np.zeros(basis.n_modes))
    assert u.max_speed() == 0.0


def test_reconstruct_unit_vector(basis):
    c = np.zeros(basis.n_modes)
    c[0] = 1.0
    u = reconstruct_velocity(basis, c)
    assert np.array_equal(u.u, basis.eta[0, 0])
    assert np.array_equal(u.v, basis.eta[0, 1])


def test_reconstruct_homogeneous(basis):
    rng = np.random.default_rng(0)
    c = rng.standard_normal(basis.n_modes)
    u1 = reconstruct_velocity(basis, c)
    u3 = reconstruct_velocity(basis, 3.0 * c)
    assert np.allclose(u3.u, 3.0 * u1.u, atol=1e-13)
    assert np.allclose(u3.v, 3.0 * u1.v, atol=1e-13)


def test_reconstructed_divergence_tiny(basis):
    rng = np.random.default_rng(1)
    for _ in range(20):
        u = reconstruct_velocity(basis, rng.standard_normal(basis.n_modes))
        divergence = u.du_dx + u.dv_dy
        scale = max(np.max(np.abs(u.du_dx)), np.max(np.abs(u.dv_dy)), 1e-300)
        assert np.max(np.abs(divergence)) <= 1e-10 * scale


def test_gram_positive_definite(basis):
    M = assemble_weighted_gram(basis, ScalarField.constant(basis.grid, 1.0))
    assert np.min(np.linalg.eigvalsh(M)) > 0.0


def test_gram_zero_density(basis):
    M = assemble_weighted_gram(basis, ScalarField.constant(basis.grid, 0.0))
    assert np.all(M == 0.0)


def test_gram_linear_in_density(basis):
    rng = np.random.default_rng(2)
    rho = ScalarField(basis.grid, 1.0 + rng.random(basis.grid.shape))
    M1 = assemble_weighted_gram(basis, rho)
    M2 = assemble_weighted_gram(basis, ScalarField(basis.grid, 2.0 * rho.values))
    assert np.allclose(M2, 2.0 * M1, rtol=1e-13)


def test_gram_rejects_negative_density(basis):
    with pytest.raises(ValueError):
        assemble_weighted_gram(basis, ScalarField.constant(basis.grid, -1.0))


def test_viscous_zero(basis):
    A = assemble_viscous(basis, ScalarField.constant(basis.grid, 0.0), 0.0)
    assert np.all(A == 0.0)


def test_viscous_eps_only_definite(basis):
    A = assemble_viscous(basis, ScalarField.constant(basis.grid, 0.0), 1.0)
    assert np.min(np.linalg.eigvalsh(A)) > 0.0


def test_viscous_quadratic_form_identity(basis):
    rng = np.random.default_rng(3)
    mu = ScalarField.constant(basis.grid, 0.7)
    eps = 0.3
    A = assemble_viscous(basis, mu, eps)
    c = rng.standard_normal(basis.n_modes)
    u = reconstruct_velocity(basis, c)
    d12 = 0.5 * (u.du_dy + u.dv_dx)
    dsq = u.du_dx ** 2 + u.dv_dy ** 2 + 2.0 * d12 ** 2
    grad_sq = u.du_dx ** 2 + u.du_dy ** 2 + u.dv_dx ** 2 + u.dv_dy ** 2
    direct = integrate_values(basis.grid, 2.0 * mu.values * dsq + eps * grad_sq)
    assert float(c @ A @ c) == pytest.approx(direct, rel=1e-12)


def test_assembled_matrices_symmetric(basis):
    rng = np.random.default_rng(4)
    rho = ScalarField(basis.grid, 1.0 + rng.random(basis.grid.shape))
    mu = ScalarField(basis.grid, rng.random(basis.grid.shape))
    for mat in (assemble_weighted_gram(basis, rho),
                assemble_viscous(basis, mu, 0.1)):
        assert np.max(np.abs(mat - mat.T)) <= 1e-13 * np.max(np.abs(mat))


def test_advection_vector_trivial(basis):
    grid = basis.grid
    rho = ScalarField.constant(grid, 1.0)
    zero_u = reconstruct_velocity(basis, np.zeros(basis.n_modes))
    assert np.all(assemble_advection(basis, rho, zero_u) == 0.0)
    u = reconstruct_velocity(basis, np.ones(basis.n_modes))
    assert np.all(assemble_advection(basis, ScalarField.constant(grid, 0.0), u) == 0.0)


def test_advection_vector_quadratic_homogeneity(basis):
    rng = np.random.default_rng(5)
    rho = ScalarField(basis.grid, 1.0 + rng.random(basis.grid.shape))
    c = rng.standard_normal(basis.n_modes)
    b1 = assemble_advection(basis, rho, reconstruct_velocity(basis, c))
    b2 = assemble_advection(basis, rho, reconstruct_velocity(basis, 2.0 * c))
    assert np.allclose(b2, 4.0 * b1, rtol=1e-12)


def test_advection_matrix_exactly_skew(basis):
    rng = np.random.default_rng(6)
    rho = ScalarField(basis.grid, 1.0 + rng.random(basis.grid.shape))
    u = reconstruct_velocity(basis, rng.standard_normal(basis.n_modes))
    B = assemble_advection_matrix(basis, rho, u)
    assert np.array_equal(B, -B.T)


def test_project_initial_zero(basis):
    grid = basis.grid
    rho0 = ScalarField.constant(grid, 1.0)
    from nsfourier.grid import VectorField
    c = project_initial(basis, rho0, VectorField.zero(grid))
    assert np.allclose(c, 0.0, atol=1e-14)


def test_project_initial_exact_mode(basis):
    grid = basis.grid
    rho0 = ScalarField.constant(grid, 1.3)
    from nsfourier.grid import VectorField
    m0 = VectorField(grid, rho0.values * basis.eta[1, 0],
                     rho0.values * basis.eta[1, 1])
    c = project_initial(basis, rho0, m0)
    expected = np.zeros(basis.n_modes)
    expected[1] = 1.0
    assert np.max(np.abs(c - expected)) <= 1e-10


def test_project_initial_round_trip(basis):
    grid = basis.grid
    rng = np.random.default_rng(7)
    rho0 = ScalarField(grid, 1.0 + 0.3 * rng.random(grid.shape))
    a = rng.standard_normal(basis.n_modes)
    u = reconstruct_velocity(basis, a)
    from nsfourier.grid import VectorField
    m0 = VectorField(grid, rho0.values * u.u, rho0.values * u.v)
    c = project_initial(basis, rho0, m0)
    assert np.max(np.abs(c - a)) <= 1e-8
