import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from intrusive_uq.closure import Projector
from intrusive_uq.collocation import run_sc, sc_error_series, sc_quantities, solve_deterministic
from intrusive_uq.errors import CollocationFailure
from intrusive_uq.harness.presets import burgers_random_shock, burgers_steady, sod
from intrusive_uq.mesh import Mesh1D
from intrusive_uq.models import burgers_model, euler_model
from intrusive_uq.random_space import build_total_degree_basis, eval_basis, tensor_quadrature
from intrusive_uq.solver import Problem, SolverConfig


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(1, 9))
def test_expectation_is_linear_in_states(a, b, Q):
    rng = np.random.default_rng(Q)
    rule = tensor_quadrature("gauss_legendre", Q, 1)
    s1, s2 = rng.standard_normal((2, 4, Q, 2))
    E1, _ = sc_quantities(s1, rule)
    E2, _ = sc_quantities(s2, rule)
    E, _ = sc_quantities(a * s1 + b * s2, rule)
    np.testing.assert_allclose(E, a * E1 + b * E2, atol=1e-12)


def test_quantities_match_weighted_sums(rng):
    rule = tensor_quadrature("gauss_legendre", 7, 1)
    states = rng.standard_normal((5, 7, 1))
    w = rule.weights / rule.weights.sum()
    E, V = sc_quantities(states, rule, chunk=3)
    np.testing.assert_allclose(E[:, 0], states[:, :, 0] @ w, rtol=1e-14)
    np.testing.assert_allclose(V[:, 0], ((states[:, :, 0] - E) ** 2) @ w, rtol=1e-12)


def test_deterministic_problem_has_zero_variance():
    case = burgers_random_shock(n_cells=60, x_shock=(0.5, 0.5))
    rule = tensor_quadrature("gauss_legendre", 5, 1)
    cfg = SolverConfig(t_end=0.2)
    run = run_sc(case.problem, rule, cfg)
    E, V = run.quantities()
    assert V.max() < 1e-28
    det = solve_deterministic(burgers_model(), case.problem.mesh, lambda x: (x[:, 0] < 0.5).astype(float)[:, None], cfg)
    for k in range(rule.Q):
        np.testing.assert_array_equal(run.states[:, k], det)


def test_blackbox_and_coupled_agree_with_fixed_step():
    case = burgers_random_shock(n_cells=50)
    rule = tensor_quadrature("gauss_legendre", 6, 1)
    cfg = SolverConfig(n_steps=40, dt=0.008, quad_chunk=4)
    bb = run_sc(case.problem, rule, cfg, mode="blackbox")
    cp = run_sc(case.problem, rule, cfg, mode="coupled")
    np.testing.assert_allclose(bb.states, cp.states, atol=1e-14)


def test_blackbox_uses_per_point_time_steps():
    case = sod(n_cells=50, t_end=0.1)
    rule = tensor_quadrature("gauss_legendre", 3, 1)
    run = run_sc(case.problem, rule, SolverConfig(t_end=0.1))
    np.testing.assert_allclose(run.times, 0.1)
    assert run.steps.min() > 0


def test_steady_modes_reach_same_state():
    case = burgers_steady(n_cells=10)
    rule = tensor_quadrature("gauss_legendre", 4, 1)
    # the Lax-Friedrichs steady state depends on dx / dt, so both modes share one step
    cfg = SolverConfig(eps=1e-10, dt=0.04)
    bb = run_sc(case.problem, rule, cfg, mode="blackbox")
    cp = run_sc(case.problem, rule, cfg, mode="coupled")
    E_bb, _ = bb.quantities()
    E_cp, _ = cp.quantities()
    np.testing.assert_allclose(E_bb, E_cp, atol=1e-7)


def test_projected_moments_match_quadrature():
    case = burgers_random_shock(n_cells=30)
    rule = tensor_quadrature("gauss_legendre", 8, 1)
    basis = build_total_degree_basis(4, 1)
    run = run_sc(case.problem, rule, SolverConfig(t_end=0.1), basis=basis)
    phi = eval_basis(basis, rule.points)
    w = rule.weights / rule.weights.sum()
    expect = np.einsum("k,jk,kn->jn", w, run.states[:, :, 0], phi)
    np.testing.assert_allclose(run.moments[:, :, 0], expect, atol=1e-14)
    E, _ = run.quantities()
    np.testing.assert_allclose(run.moments[:, 0], E, atol=1e-14)
    proj = Projector.build(basis, rule)
    assert proj.Q == rule.Q


def test_error_series_rows():
    case = burgers_random_shock(n_cells=40)
    rule = tensor_quadrature("gauss_legendre", 4, 1)
    run = run_sc(case.problem, rule, SolverConfig(n_steps=12), mode="coupled")
    rows = sc_error_series(run, run.trajectory[-1], case.problem.mesh, blackbox_seconds=2.0)
    assert len(rows) == 13
    assert rows[0]["iteration"] == 0 and rows[0]["wall_seconds"] == 0.0
    assert rows[-1]["rel_E_error"] == 0.0 and rows[-1]["rel_Var_error"] == 0.0
    assert rows[-1]["rescaled_seconds"] == pytest.approx(2.0)
    assert np.all(np.diff([r["iteration"] for r in rows]) == 1)


def test_error_series_needs_coupled_run():
    case = burgers_random_shock(n_cells=20)
    rule = tensor_quadrature("gauss_legendre", 2, 1)
    run = run_sc(case.problem, rule, SolverConfig(n_steps=2))
    with pytest.raises(ValueError):
        sc_error_series(run, run.states[:, :1], case.problem.mesh)


def test_coupled_observer_sees_every_step():
    case = burgers_random_shock(n_cells=20)
    rule = tensor_quadrature("gauss_legendre", 3, 1)
    seen = []
    run_sc(case.problem, rule, SolverConfig(n_steps=5), mode="coupled", observer=lambda E, V, rec: seen.append(rec["iteration"]))
    assert seen == [1, 2, 3, 4, 5]


def test_steady_failure_reports_points():
    case = burgers_steady(n_cells=10)
    rule = tensor_quadrature("gauss_legendre", 3, 1)
    with pytest.raises(CollocationFailure) as info:
        run_sc(case.problem, rule, SolverConfig(eps=1e-14, max_steps=3))
    assert sorted(info.value.failures) == [0, 1, 2]


def test_inadmissible_point_is_reported():
    model = euler_model(1.4, 1)
    mesh = Mesh1D(0, 1, 10, "outflow")

    def ic(x, xi):
        # the state at xi > 0 has negative pressure
        p = np.where(xi[:, 0] > 0, -1.0, 1.0)
        s = model.from_primitive(np.ones_like(p), np.zeros((p.size, 1)), np.abs(p))
        s[:, 2] *= np.sign(p)
        return np.repeat(s[None], x.shape[0], axis=0)

    rule = tensor_quadrature("gauss_legendre", 4, 1)
    with pytest.raises(CollocationFailure) as info:
        run_sc(Problem(model, mesh, ic, 1), rule, SolverConfig(n_steps=2))
    assert sorted(info.value.failures) == [2, 3]


def test_unknown_mode():
    case = burgers_random_shock(n_cells=10)
    with pytest.raises(ValueError):
        run_sc(case.problem, tensor_quadrature("gauss_legendre", 2, 1), SolverConfig(n_steps=1), mode="hybrid")


@pytest.mark.parametrize("mode", ["blackbox", "coupled"])
def test_worker_count_does_not_change_collocation(mode):
    case = sod(n_cells=40, t_end=0.05)
    rule = tensor_quadrature("gauss_legendre", 7, 1)
    outs = [run_sc(case.problem, rule, SolverConfig(t_end=0.05, workers=w, quad_chunk=2), mode=mode).states for w in (1, 3)]
    assert np.array_equal(outs[0], outs[1])
