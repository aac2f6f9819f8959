import json
import math
import os

import numpy as np
import pytest

from periodic_american import (
    MCConfig,
    OptionKind,
    OptionSpec,
    ParameterError,
    default_horizon,
    down_crossing_transform,
    empirical_barrier_search,
    phi,
    psi,
    simulate_crossing_transform,
    simulate_strategy_value,
    solve_barrier,
    up_crossing_transform,
    value,
)

K, R, LAM = 50.0, 0.05, 1.0


def test_config_validation():
    with pytest.raises(ParameterError):
        MCConfig(n_paths=10)
    with pytest.raises(ParameterError):
        MCConfig(batch_size=0)
    with pytest.raises(ParameterError):
        MCConfig(horizon=-1.0)


def test_default_horizon():
    assert default_horizon(0.05, 1.0) == 1000.0
    assert default_horizon(0.5, 0.01) == 2000.0


def test_estimates_deterministic_across_batching_and_threads(sn_model):
    option = OptionSpec(OptionKind.PUT, K, R, LAM)
    sol = solve_barrier(sn_model, option)
    x0 = math.log(K)
    base = MCConfig(n_paths=20_000, horizon=100.0, seed=5)
    ref = simulate_strategy_value(sn_model, option, sol.log_barrier, x0, base)

    rebatched = MCConfig(n_paths=20_000, horizon=100.0, seed=5, batch_size=3_000)
    assert simulate_strategy_value(sn_model, option, sol.log_barrier, x0, rebatched).mean == ref.mean

    os.environ["PRICER_THREADS"] = "1"
    try:
        single = simulate_strategy_value(sn_model, option, sol.log_barrier, x0, base)
    finally:
        del os.environ["PRICER_THREADS"]
    assert single.mean == ref.mean
    assert single.stderr == ref.stderr

    # a different seed produces a different sample
    other = MCConfig(n_paths=20_000, horizon=100.0, seed=6)
    assert simulate_strategy_value(sn_model, option, sol.log_barrier, x0, other).mean != ref.mean


def test_estimate_json_fields(sn_model):
    option = OptionSpec(OptionKind.PUT, K, R, LAM)
    sol = solve_barrier(sn_model, option)
    est = simulate_strategy_value(
        sn_model, option, sol.log_barrier, math.log(K), MCConfig(n_paths=1_000, horizon=50.0)
    )
    data = json.loads(est.to_json())
    assert data["n_paths"] == 1_000
    assert data["stderr"] > 0
    assert data["tail_bound"] == pytest.approx(K * math.exp(-R * 50.0))


def test_path_law_through_exponential_moments(sn_model, sp_model):
    # stopping at the very first opportunity (level far above the start)
    # turns the estimator into E[e^{-r T1 + theta X_T1}] = lam/(lam+r-psi(theta));
    # with the martingale calibration and theta=1 this equals lam/(lam+delta)
    cfg = MCConfig(n_paths=120_000, horizon=400.0, seed=2)
    probes = {
        "sn": [(1.0, 1.0), (2.0, 1.0), (1.0, 0.25)],
        # the dual of the upward-jump model has a much larger exponent;
        # smaller theta keeps both the mean and the variance finite
        "sp": [(0.5, 1.0), (0.3, 1.0), (0.2, 0.25)],
    }
    for model in (sn_model, sp_model):
        sn = model.sn_view()
        for theta, lam in probes[model.side.value]:
            est = simulate_crossing_transform(sn, R, lam, 0.0, 50.0, theta, "down", cfg)
            exact = lam / (lam + R - psi(sn, theta))
            assert abs(est.mean - exact) <= 3.0 * est.stderr
            assert est.stderr < 0.05 * exact


def test_crossing_transforms_match_analytic(sn_model):
    cfg = MCConfig(n_paths=100_000, horizon=250.0, seed=3)
    a = math.log(20.0)
    for dx in (-0.5, 0.5):
        est = simulate_crossing_transform(sn_model, R, LAM, a + dx, a, 0.0, "down", cfg)
        exact = down_crossing_transform(sn_model, R, LAM, a + dx, a, 0.0)
        assert abs(est.mean - exact) <= 3.0 * est.stderr
    b = math.log(70.0)
    for dx in (-0.3, 0.3):
        est = simulate_crossing_transform(sn_model, R, LAM, b + dx, b, 0.0, "up", cfg)
        exact = up_crossing_transform(sn_model, R, LAM, b + dx, b, 0.0)
        assert abs(est.mean - exact) <= 3.0 * est.stderr


def test_crossing_transform_direction_validated(sn_model):
    with pytest.raises(ParameterError):
        simulate_crossing_transform(sn_model, R, LAM, 0.0, 0.0, 0.0, "sideways", MCConfig())


def test_strategy_value_deep_in_the_money_limit(sn_model):
    # far below the barrier every opportunity exercises; the estimate must
    # match the analytic value, which itself tends to K*lam/(lam+r)
    option = OptionSpec(OptionKind.PUT, K, R, LAM)
    sol = solve_barrier(sn_model, option)
    x0 = sol.log_barrier - 3.0
    est = simulate_strategy_value(
        sn_model, option, sol.log_barrier, x0, MCConfig(n_paths=100_000, horizon=250.0, seed=4)
    )
    exact = value(sn_model, option, sol.log_barrier, x0)
    assert abs(est.mean - exact) <= 3.0 * est.stderr
    assert exact < K * LAM / (LAM + R)


def test_call_tail_bound_geometric(sp_model):
    option = OptionSpec(OptionKind.CALL, K, R, LAM)
    sol = solve_barrier(sp_model, option)
    est = simulate_strategy_value(
        sp_model, option, sol.log_barrier, math.log(K), MCConfig(n_paths=1_000, horizon=500.0)
    )
    ratio = LAM / (LAM + R - psi(sp_model, 1.0))
    expected = K * ratio ** (int(LAM * 500.0) + 1) / (1.0 - ratio)
    assert est.truncation_bound == pytest.approx(expected)


def test_antithetic_variates_run_and_differ(sn_model):
    option = OptionSpec(OptionKind.PUT, K, R, LAM)
    sol = solve_barrier(sn_model, option)
    plain = MCConfig(n_paths=40_000, horizon=100.0, seed=9)
    anti = MCConfig(n_paths=40_000, horizon=100.0, seed=9, antithetic=True)
    e_plain = simulate_strategy_value(sn_model, option, sol.log_barrier, math.log(K), plain)
    e_anti = simulate_strategy_value(sn_model, option, sol.log_barrier, math.log(K), anti)
    assert e_anti.mean != e_plain.mean
    assert abs(e_anti.mean - e_plain.mean) < 6.0 * (e_plain.stderr + e_anti.stderr)


def test_barrier_search_degenerate_and_deterministic(sn_model):
    option = OptionSpec(OptionKind.PUT, K, R, LAM)
    sol = solve_barrier(sn_model, option)
    cfg = MCConfig(n_paths=5_000, horizon=100.0, seed=1)
    only = [sol.log_barrier]
    best, _ = empirical_barrier_search(sn_model, option, math.log(K), only, cfg)
    assert best == sol.log_barrier
    with pytest.raises(ParameterError):
        empirical_barrier_search(sn_model, option, math.log(K), [], cfg)
    grid = [sol.log_barrier + 0.1 * (i - 2) for i in range(5)]
    first = empirical_barrier_search(sn_model, option, math.log(K), grid, cfg)
    second = empirical_barrier_search(sn_model, option, math.log(K), grid, cfg)
    assert first[0] == second[0]
    assert [e.mean for e in first[1]] == [e.mean for e in second[1]]
