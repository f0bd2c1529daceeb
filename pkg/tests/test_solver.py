import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridfrac.basis import Grid
from hybridfrac.models import get_model
from hybridfrac.opmatrix import build_generalized, gamma_fn
from hybridfrac.oracles import exact_solutions, rk4_solve
from hybridfrac.solver import (
    FractionalSystem,
    ModelError,
    SolveConfig,
    SolverError,
    contraction_bound,
    convergence_study,
    estimate_lipschitz,
    initial_shift,
    solve_hf,
)


def scalar(order, init, f, T=1.0):
    return FractionalSystem([order], [init], lambda t, y: np.atleast_1d(f(t, y[0])), T=T)


def test_system_validation():
    with pytest.raises(ValueError):
        FractionalSystem([0.5, 0.5], [[0]], lambda t, y: y)
    with pytest.raises(ValueError):
        FractionalSystem([1.3], [[0]], lambda t, y: y)  # needs y'(0) too
    with pytest.raises(ValueError):
        FractionalSystem([0.0], [[0]], lambda t, y: y)
    with pytest.raises(ValueError):
        FractionalSystem([3.0], [[0, 0, 0]], lambda t, y: y)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(m=10, newton_tol=0)
    with pytest.raises(ValueError):
        SolveConfig(m=10, max_newton_iters=0)
    with pytest.raises(ValueError):
        SolveConfig(m=10, mode="fsolve")
    with pytest.raises(ValueError):
        SolveConfig()


def test_initial_shift_examples():
    p = initial_shift(scalar(0.9, [5.0], lambda t, y: 0 * y))[0]
    assert p(0.3) == 5 and p(0.9) == 5
    p = initial_shift(scalar(1.3, [0.0, 1.0], lambda t, y: 0 * y))[0]
    assert p(0.4) == pytest.approx(0.4, abs=1e-16)
    p = initial_shift(scalar(2.4, [0.0, 1.0, 1.0], lambda t, y: 0 * y))[0]
    assert p(0.5) == pytest.approx(0.5 + 0.125, abs=1e-16)


@pytest.mark.parametrize("alpha", [0.3, 0.9, 1.0, 1.7])
def test_zero_rhs_is_constant(alpha):
    init = [5.0] + [0.0] * (math.ceil(alpha) - 1)
    res = solve_hf(scalar(alpha, init, lambda t, y: 0.0 * y), SolveConfig(m=16))
    np.testing.assert_array_equal(res.nodes[:, 0], np.full(17, 5.0))


def test_constant_rhs_unit_order_exact():
    # exact algebra; the float sums of h differ from j*h by at most a few ulps
    res = solve_hf(scalar(1.0, [0.0], lambda t, y: 1.0 + 0 * y), SolveConfig(m=10))
    np.testing.assert_allclose(res.nodes[:, 0], res.t, rtol=0, atol=4 * np.finfo(float).eps)


def test_constant_rhs_fractional_node_exact():
    # J^alpha 1 = t^alpha / Gamma(alpha+1), and the constant is expanded exactly
    res = solve_hf(scalar(0.5, [0.0], lambda t, y: 1.0 + 0 * y), SolveConfig(m=20))
    np.testing.assert_allclose(res.nodes[:, 0], res.t**0.5 / gamma_fn(1.5), atol=1e-14)


def test_example_62_table4_first_row():
    res = solve_hf(get_model("example-6.2"), SolveConfig(h=0.1))
    err = np.abs(res.nodes - exact_solutions("example-6.2")(res.t)).max(axis=0)
    assert err[0] == pytest.approx(1.387236644377e-3, rel=5e-6)
    assert err[1] == pytest.approx(6.249545001395e-3, rel=5e-6)


def test_exponential_growth():
    res = solve_hf(scalar(1.0, [1.0], lambda t, y: y), SolveConfig(h=1e-3))
    assert np.abs(res.nodes[:, 0] - np.exp(res.t)).max() <= 1e-5


def test_node_zero_exact():
    sys_ = get_model("hepatitis-b")
    res = solve_hf(sys_, SolveConfig(m=20, estimate_lipschitz=False))
    assert np.array_equal(res.nodes[0], sys_.y_initial)


def test_series_match_nodes():
    res = solve_hf(get_model("example-6.3"), SolveConfig(m=20, estimate_lipschitz=False))
    for i, s in enumerate(res.series):
        np.testing.assert_array_equal(s.node_values, res.nodes[:, i])
        np.testing.assert_allclose(
            res.z_series[i].node_values + res.nodes[0, i], res.nodes[:, i], atol=1e-15
        )


def test_node_m_equation_consistent_with_shf_form():
    # node m from the TF-coefficient equation equals the SHF recurrence extended to j = m
    alpha = 0.6
    sys_ = scalar(alpha, [1.0], lambda t, y: -y + np.sin(t))
    m = 12
    res = solve_hf(sys_, SolveConfig(m=m, newton_tol=1e-15, estimate_lipschitz=False))
    g = res.grid
    E = -res.nodes[:, 0] + np.sin(res.t)
    big = build_generalized(alpha, Grid(m + 1, g.h))  # rows long enough for offset m
    A, B = big.Pss.first_row, big.Pts.first_row
    z_m = sum(E[k] * A[m - k] + (E[k + 1] - E[k]) * B[m - k] for k in range(m))
    assert res.nodes[m, 0] - 1.0 == pytest.approx(z_m, abs=1e-13)


def test_residual_guarantee():
    cfg = SolveConfig(m=40, newton_tol=1e-12, estimate_lipschitz=False)
    res = solve_hf(get_model("example-6.1"), cfg)
    assert res.diagnostics.max_residual <= cfg.newton_tol
    assert res.diagnostics.iterations[0] == 0
    assert np.all(res.diagnostics.iterations[1:] >= 1)


@pytest.mark.parametrize("name", ["example-6.1", "example-6.2", "example-6.3"])
def test_mode_agreement(name):
    sys_ = get_model(name)
    a = solve_hf(sys_, SolveConfig(m=50, estimate_lipschitz=False))
    b = solve_hf(sys_, SolveConfig(m=50, mode="global", estimate_lipschitz=False))
    assert np.abs(a.nodes - b.nodes).max() <= 10 * 1e-12
    assert b.diagnostics.global_iterations >= 1


@pytest.mark.parametrize(
    "name,orders", [("example-6.2", (0.7, 0.9)), ("example-6.3", (0.8, 0.7, 0.6)), ("smoking", 0.85)]
)
def test_mode_agreement_fractional(name, orders):
    sys_ = get_model(name, orders=orders)
    a = solve_hf(sys_, SolveConfig(m=30, estimate_lipschitz=False))
    b = solve_hf(sys_, SolveConfig(m=30, mode="global", estimate_lipschitz=False))
    scale = np.maximum(1.0, np.abs(a.nodes))
    assert (np.abs(a.nodes - b.nodes) / scale).max() <= 10 * 1e-12


@pytest.mark.parametrize("name,orders", [("example-6.2", (1.0, 1.0)), ("example-6.3", (0.8, 0.7, 0.6)), ("example-6.1", None)])
def test_causality_under_truncation(name, orders):
    m, h = 40, 1 / 40
    full = solve_hf(get_model(name, orders=orders), SolveConfig(m=m, estimate_lipschitz=False))
    j = 17
    short = solve_hf(get_model(name, orders=orders, T=j * h), SolveConfig(m=j, estimate_lipschitz=False))
    np.testing.assert_allclose(short.nodes, full.nodes[: j + 1], rtol=0, atol=1e-12)


def test_model_error_on_nonfinite_rhs():
    sys_ = scalar(1.0, [1.0], lambda t, y: np.float64(1.0) / (0.5 - t) + 0 * y)
    with pytest.raises(ModelError), np.errstate(divide="ignore"):
        solve_hf(sys_, SolveConfig(m=4))


def test_solver_error_names_node():
    # y' = y^2 from y(0)=1 blows up at t=1; a coarse implicit step has no real root
    sys_ = scalar(1.0, [1.0], lambda t, y: y * y, T=2.0)
    with pytest.raises((SolverError, ModelError)) as info:
        solve_hf(sys_, SolveConfig(m=4, max_newton_iters=20, estimate_lipschitz=False))
    if isinstance(info.value, SolverError):
        assert info.value.node is not None
        assert "node" in str(info.value)


def test_contraction_examples():
    rep = contraction_bound(1, 0.5, 1.0, 1.0)
    assert rep.value == pytest.approx(0.5, abs=1e-12) and rep.guaranteed
    rep = contraction_bound(1, 1.0, 0.5, 1.0)
    assert rep.value == pytest.approx(1.1283791670955126, abs=1e-12) and not rep.guaranteed
    rep = contraction_bound(1, 0.0, 0.5, 1.0)
    assert rep.value == 0 and not rep.guaranteed and "degenerate" in rep.status
    rep = contraction_bound(2, 1.0, 1.3, 1.0)
    assert rep.value is None and "not applicable" in rep.status


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.floats(1e-3, 10), st.floats(0.01, 1.0), st.floats(0.1, 5))
def test_contraction_formula(n, L, alpha, T):
    rep = contraction_bound(n, L, alpha, T)
    expect = n * L * T**alpha / math.gamma(alpha + 1)
    assert rep.value == pytest.approx(expect, rel=1e-14)
    assert rep.guaranteed == (0 < expect < 1)


def test_lipschitz_estimate_linear():
    sys_ = get_model("example-6.2")
    res = solve_hf(sys_, SolveConfig(m=20))
    L = estimate_lipschitz(sys_, res.nodes, 1.0)
    assert L == pytest.approx(1.0, rel=1e-6)
    c = res.diagnostics.contraction
    assert c.lipschitz_source == "heuristic"
    assert c.value == pytest.approx(2.0, rel=1e-6) and not c.guaranteed


def test_supplied_lipschitz():
    res = solve_hf(scalar(1.0, [1.0], lambda t, y: -0.5 * y), SolveConfig(m=10, lipschitz=0.5))
    c = res.diagnostics.contraction
    assert c.lipschitz_source == "supplied" and c.guaranteed and c.value == pytest.approx(0.5)


def test_mixed_orders_not_applicable():
    res = solve_hf(get_model("example-6.3", orders=(0.8, 0.7, 0.6)), SolveConfig(m=10))
    assert "not applicable" in res.diagnostics.contraction.status


def test_convergence_study_example_62():
    study = convergence_study(get_model("example-6.2"), exact_solutions("example-6.2"), [1 / 200, 1 / 400])
    ratio = study.errors[0, 0] / study.errors[1, 0]
    assert ratio == pytest.approx(4.0, abs=0.05)


def test_convergence_study_zero_rhs():
    sys_ = scalar(0.5, [2.0], lambda t, y: 0 * y)
    study = convergence_study(sys_, lambda t: np.full((len(t), 1), 2.0), [0.1, 0.05])
    assert study.exact and np.all(study.errors == 0)


def test_convergence_study_exponential():
    sys_ = scalar(1.0, [1.0], lambda t, y: y)
    study = convergence_study(sys_, lambda t: np.exp(t)[:, None], [1 / 100, 1 / 200, 1 / 400])
    assert study.orders[0] == pytest.approx(2.0, abs=0.2)


@pytest.mark.parametrize("name", ["example-6.2", "example-6.3", "smoking", "lung-cancer", "hepatitis-b"])
def test_unit_order_matches_rk4(name):
    sys_ = get_model(name, orders=1.0)
    res = solve_hf(sys_, SolveConfig(h=0.002, estimate_lipschitz=False))
    ref = rk4_solve(sys_, res.grid).nodes
    rel = np.abs(res.nodes - ref).max(axis=0) / np.abs(ref).max(axis=0)
    assert rel.max() <= 1e-3


def test_higher_order_against_series():
    # D^1.5 y = 1, y(0)=0, y'(0)=1 -> y = t + t^1.5 / Gamma(2.5), node-exact
    sys_ = scalar(1.5, [0.0, 1.0], lambda t, y: 1.0 + 0 * y)
    res = solve_hf(sys_, SolveConfig(m=16))
    np.testing.assert_allclose(res.nodes[:, 0], res.t + res.t**1.5 / gamma_fn(2.5), atol=1e-14)
