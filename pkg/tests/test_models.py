import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from intrusive_uq.errors import AdmissibilityError, UnsupportedStateError
from intrusive_uq.models import burgers_model, burgers_sg_analytic_flux, euler_model, galerkin_tensors
from intrusive_uq.random_space import build_total_degree_basis, eval_basis, gauss_legendre_1d, gauss_lobatto_1d
from intrusive_uq.riemann import euler_star_state, exact_riemann_burgers, exact_riemann_euler_1d

from oracles import conserved, legendre_triple_products, random_primitive


def kinetic_burgers_flux(ul, ur, N, nodes, weights, dx_dt):
    """Moments of the Lax-Friedrichs flux of the reconstructed states at quadrature nodes."""
    basis = build_total_degree_basis(N - 1, 1)
    phi = eval_basis(basis, nodes[:, None])
    a, b = phi @ ul, phi @ ur
    g = 0.25 * (a * a + b * b) - 0.5 * dx_dt * (b - a)
    return (0.5 * weights * g) @ phi


# -- Burgers -------------------------------------------------------------------


def test_burgers_flux_examples():
    model = burgers_model()
    assert model.numerical_flux(np.array([0.0]), np.array([0.0]), dx_dt=1.0)[0] == 0.0
    assert model.numerical_flux(np.array([1.0]), np.array([-1.0]), dx_dt=1.0)[0] == pytest.approx(1.5)


@given(st.floats(-50, 50), st.floats(0.1, 10))
def test_burgers_consistency(u, ratio):
    model = burgers_model()
    v = np.array([u])
    assert abs(model.numerical_flux(v, v, dx_dt=ratio)[0] - 0.5 * u * u) <= 1e-12 * max(1.0, u * u)


@pytest.mark.parametrize("N", range(1, 11))
def test_galerkin_tensors_match_legendre_series(N):
    T = galerkin_tensors(N)
    np.testing.assert_allclose(T.C, legendre_triple_products(N), atol=1e-12)
    np.testing.assert_allclose(T[0], np.eye(N), atol=1e-12)
    for i in range(N):
        np.testing.assert_allclose(T[i], T[i].T, atol=1e-15)


def test_galerkin_tensors_reject_multivariate_basis():
    with pytest.raises(ValueError):
        galerkin_tensors(build_total_degree_basis(2, 2))


def test_analytic_flux_constant_state():
    T = galerkin_tensors(5)
    u = np.zeros(5)
    u[0] = 1.7
    np.testing.assert_allclose(burgers_sg_analytic_flux(u, u, T, 3.0), 0.5 * 1.7**2 * np.eye(5)[0], atol=1e-14)


def test_analytic_flux_matches_dense_quadrature(rng):
    N = 5
    T = galerkin_tensors(N)
    x, w = gauss_legendre_1d(200)
    for _ in range(20):
        ul, ur = rng.standard_normal(N), rng.standard_normal(N)
        ratio = rng.uniform(0.5, 5)
        expect = kinetic_burgers_flux(ul, ur, N, x, w, ratio)
        np.testing.assert_allclose(burgers_sg_analytic_flux(ul, ur, T, ratio), expect, atol=1e-12)


@pytest.mark.parametrize("N", range(2, 11))
def test_analytic_flux_equals_gauss_kinetic_flux(rng, N):
    # Gauss-Legendre with 3N/2 - 1 points integrates the cubic integrand exactly
    Q = int(np.ceil(1.5 * N - 1))
    x, w = gauss_legendre_1d(Q)
    T = galerkin_tensors(N)
    for _ in range(10):
        ul, ur = rng.standard_normal(N), rng.standard_normal(N)
        expect = kinetic_burgers_flux(ul, ur, N, x, w, 2.0)
        np.testing.assert_allclose(burgers_sg_analytic_flux(ul, ur, T, 2.0), expect, atol=1e-12)


@pytest.mark.parametrize("N", range(2, 11))
def test_lobatto_kinetic_flux_exact_with_enough_points(rng, N):
    Q = int(np.ceil((3 * N - 3 + 3) / 2))  # exactness 2Q - 3 >= 3(N - 1)
    x, w = gauss_lobatto_1d(Q)
    T = galerkin_tensors(N)
    ul, ur = rng.standard_normal(N), rng.standard_normal(N)
    np.testing.assert_allclose(
        burgers_sg_analytic_flux(ul, ur, T, 2.0), kinetic_burgers_flux(ul, ur, N, x, w, 2.0), atol=1e-12
    )


# -- Euler ---------------------------------------------------------------------


def test_rest_gas_flux():
    model = euler_model(1.4, 2)
    u = model.from_primitive(np.array([1.289]), np.zeros((1, 2)), np.array([101325.0]))[0]
    n = np.array([0.6, 0.8])
    np.testing.assert_allclose(model.physical_flux(u, n), [0.0, 101325.0 * 0.6, 101325.0 * 0.8, 0.0], atol=1e-9)


def test_pressure_of_gas_at_rest():
    model = euler_model(1.4, 2)
    assert model.pressure(np.array([1.0, 0.0, 0.0, 2.5])) == pytest.approx(0.4 * 2.5)


@pytest.mark.parametrize("flux", ["rusanov", "hll"])
@pytest.mark.parametrize("d", [1, 2])
def test_euler_flux_consistency(rng, flux, d):
    model = euler_model(1.4, d, flux)
    u = conserved(*random_primitive(rng, 1000, d))
    ang = rng.uniform(0, 2 * np.pi, 1000)
    n = np.column_stack([np.cos(ang), np.sin(ang)])[:, :d] if d == 2 else np.sign(rng.standard_normal((1000, 1)))
    F = model.physical_flux(u, n)
    np.testing.assert_allclose(model.numerical_flux(u, u, n), F, rtol=0, atol=1e-12 * np.abs(F).max())


def test_rotational_invariance(rng):
    model = euler_model(1.4, 2)
    ul = conserved(*random_primitive(rng, 200))
    ur = conserved(*random_primitive(rng, 200))
    ang = rng.uniform(0, 2 * np.pi, 200)
    c, s = np.cos(ang), np.sin(ang)
    n = np.column_stack([c, s])

    def rotate(u, sign):
        out = u.copy()
        out[:, 1] = c * u[:, 1] + sign * s * u[:, 2]
        out[:, 2] = -sign * s * u[:, 1] + c * u[:, 2]
        return out

    ex = np.tile([1.0, 0.0], (200, 1))
    rotated = rotate(model.numerical_flux(rotate(ul, 1), rotate(ur, 1), ex), -1)
    np.testing.assert_allclose(model.numerical_flux(ul, ur, n), rotated, atol=1e-12 * np.abs(rotated).max())


def test_wave_speed_bounds_flux_jacobian(rng):
    model = euler_model(1.4, 2)
    u = conserved(*random_primitive(rng, 20))
    n = np.array([0.8, -0.6])
    for row in u:
        J = np.zeros((4, 4))
        for k in range(4):
            e = np.zeros(4)
            e[k] = 1e-6 * max(1.0, abs(row[k]))
            J[:, k] = (model.physical_flux(row + e, n) - model.physical_flux(row - e, n)) / (2 * e[k])
        rho_J = np.max(np.abs(np.linalg.eigvals(J)))
        assert model.max_wave_speed(row, n) >= rho_J * (1 - 1e-6)


def test_primitive_round_trip(rng):
    model = euler_model(1.4, 2)
    rho, vel, p = random_primitive(rng, 50)
    r2, v2, p2 = model.to_primitive(model.from_primitive(rho, vel, p))
    np.testing.assert_allclose(r2, rho)
    np.testing.assert_allclose(v2, vel)
    np.testing.assert_allclose(p2, p)


def test_flux_rejects_negative_pressure():
    model = euler_model(1.4, 1)
    bad = np.array([[1.0, 2.0, 1.0]])
    good = np.array([[1.0, 0.0, 2.5]])
    with pytest.raises(AdmissibilityError):
        model.numerical_flux(bad, good, np.array([[1.0]]))


def test_reflect_mirrors_normal_velocity():
    model = euler_model(1.4, 2)
    u = np.array([1.0, 2.0, 3.0, 10.0])
    out = model.reflect(u, np.array([1.0, 0.0]))
    np.testing.assert_array_equal(out, [1.0, -2.0, 3.0, 10.0])


# -- Riemann oracles ---------------------------------------------------------------


def test_burgers_riemann_shock_speed():
    s = np.array([0.49, 0.51])
    np.testing.assert_array_equal(exact_riemann_burgers(1.0, 0.0, s), [1.0, 0.0])


def test_burgers_rarefaction_center():
    assert exact_riemann_burgers(-1.0, 1.0, 0.0) == 0.0
    assert exact_riemann_burgers(-1.0, 1.0, 0.5) == 0.5


def test_sod_star_state():
    # published values for Sod's problem, gamma = 1.4
    p, u = euler_star_state((1.0, 0.0, 1.0), (0.125, 0.0, 0.1))
    assert p == pytest.approx(0.30313, abs=1e-5)
    assert u == pytest.approx(0.92745, abs=1e-5)
    rho, _, _ = exact_riemann_euler_1d((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), np.array([0.0, 0.5, 1.5, 2.0]))
    np.testing.assert_allclose(rho, [0.42632, 0.42632, 0.26557, 0.125], atol=1e-3)


def test_riemann_vacuum_is_unsupported():
    with pytest.raises(UnsupportedStateError):
        euler_star_state((1.0, -10.0, 1.0), (1.0, 10.0, 1.0))
