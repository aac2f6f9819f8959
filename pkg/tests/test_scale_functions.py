import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from periodic_american import (
    JumpSide,
    LevyModel,
    ParameterError,
    W,
    W_bar,
    Z,
    build_scale_basis,
    int_exp_W,
    phi,
    psi,
)

R, LAM = 0.05, 1.0


@pytest.fixture(scope="module")
def basis_r(sn_model):
    return build_scale_basis(sn_model, R)


@pytest.fixture(scope="module")
def basis_rl(sn_model):
    return build_scale_basis(sn_model, R + LAM)


def test_basis_roots(sn_model, basis_r):
    assert len(basis_r.roots) == 3
    assert sum(1 for z in basis_r.roots if z > 0) == 1
    assert basis_r.phi_q == pytest.approx(phi(sn_model, R), rel=1e-12)
    # descending order, all simple
    assert list(basis_r.roots) == sorted(basis_r.roots, reverse=True)
    gaps = [a - b for a, b in zip(basis_r.roots, basis_r.roots[1:])]
    assert min(gaps) > 1e-8


def test_weights_sum_to_zero_with_brownian_part(basis_r, basis_rl):
    # W(0+) = 0 for paths of unbounded variation
    assert abs(sum(basis_r.weights)) < 1e-14
    assert abs(sum(basis_rl.weights)) < 1e-14


def test_basis_requires_sn_view_and_positive_q(sn_model, sp_model):
    with pytest.raises(ParameterError):
        build_scale_basis(sp_model, R)
    with pytest.raises(ParameterError):
        build_scale_basis(sn_model, 0.0)
    # the dual of the upward-jump model is a valid input
    build_scale_basis(sp_model.dual(), R)


def test_basis_is_cached(sn_model):
    assert build_scale_basis(sn_model, R) is build_scale_basis(sn_model, R)


def test_basis_json_round_trip(basis_r):
    data = json.loads(basis_r.to_json())
    assert data["q"] == R
    assert data["roots"] == list(basis_r.roots)
    assert data["weights"] == list(basis_r.weights)


def test_driftless_brownian_basis_closed_form():
    sigma = 0.2
    bm = LevyModel(JumpSide.SPECTRALLY_NEGATIVE, sigma, 0.0, 0.0, 1.0)
    basis = build_scale_basis(bm, 0.05)
    root = math.sqrt(2.5)
    assert basis.roots[0] == pytest.approx(root, rel=1e-12)
    assert basis.roots[1] == pytest.approx(-root, rel=1e-12)
    assert basis.weights[0] == pytest.approx(1.0 / (sigma**2 * root), rel=1e-12)
    assert basis.weights[1] == pytest.approx(-1.0 / (sigma**2 * root), rel=1e-12)


def test_laplace_transform_identity(sn_model, basis_r, basis_rl):
    # the truncated numeric transform of W must reproduce 1/(psi - q)
    for basis in (basis_r, basis_rl):
        q = basis.q
        for shift in (0.5, 1.0, 2.0):
            theta = basis.phi_q + shift
            span = 80.0 / shift
            numeric, _ = quad(lambda x: math.exp(-theta * x) * W(basis, x), 0.0, span, limit=200)
            exact = 1.0 / (psi(sn_model, theta) - q)
            assert numeric == pytest.approx(exact, rel=1e-7)


def test_W_shape(basis_r):
    assert W(basis_r, -1.0) == 0.0
    assert abs(W(basis_r, 0.0)) < 1e-14
    xs = np.linspace(0.0, 5.0, 50)
    vals = [W(basis_r, x) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_W_bar_matches_quadrature(basis_r):
    assert W_bar(basis_r, 0.0) == 0.0
    assert W_bar(basis_r, -2.0) == 0.0
    numeric, _ = quad(lambda y: W(basis_r, y), 0.0, 1.0, limit=100)
    assert W_bar(basis_r, 1.0) == pytest.approx(numeric, abs=1e-8)
    xs = np.linspace(0.1, 4.0, 20)
    vals = [W_bar(basis_r, x) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_int_exp_W_matches_quadrature(basis_rl):
    assert int_exp_W(basis_rl, 0.0, 1.0) == 0.0
    assert int_exp_W(basis_rl, -1.0, 1.0) == 0.0
    for x, theta in [(1.5, 1.0), (0.7, -1.0), (2.0, 0.0)]:
        numeric, _ = quad(lambda y: math.exp(theta * y) * W(basis_rl, x - y), 0.0, x, limit=100)
        assert int_exp_W(basis_rl, x, theta) == pytest.approx(numeric, abs=1e-8)


def test_int_exp_W_removable_point(basis_rl):
    # theta equal to a mixture root is a removable singularity
    zeta = basis_rl.roots[1]
    x = 1.3
    at = int_exp_W(basis_rl, x, zeta)
    near = [int_exp_W(basis_rl, x, zeta + eps) for eps in (-1e-6, 1e-6)]
    assert at == pytest.approx(0.5 * (near[0] + near[1]), rel=1e-6)


def test_Z_below_zero_is_exponential(basis_r):
    assert Z(basis_r, -3.0, 0.7) == pytest.approx(math.exp(-2.1), rel=1e-14)
    assert Z(basis_r, 0.0, 0.7) == 1.0


def test_Z_at_zero_argument_matches_running_integral(basis_r):
    for x in (0.5, 1.0, 3.0):
        assert Z(basis_r, x, 0.0) == pytest.approx(1.0 + R * W_bar(basis_r, x), rel=1e-12)


def test_Z_at_positive_root_is_pure_exponential(basis_r, basis_rl):
    rng = np.random.default_rng(42)
    for basis in (basis_r, basis_rl):
        for x in rng.uniform(0.0, 5.0, 20):
            assert Z(basis, float(x), basis.phi_q) == pytest.approx(
                math.exp(basis.phi_q * x), rel=1e-12
            )


def test_Z_matches_definition_by_quadrature(sn_model, basis_r, basis_rl):
    # compare against the defining display e^{tx}(1 + (q - psi(t)) int ...)
    phi_rl = basis_rl.phi_q
    for x, theta in [(2.0, phi_rl), (1.0, 0.5), (0.8, -1.0), (1.5, 3.0)]:
        integral, _ = quad(
            lambda z: math.exp(-theta * z) * W(basis_r, z), 0.0, x, limit=100
        )
        expected = math.exp(theta * x) * (1.0 + (R - psi(sn_model, theta)) * integral)
        assert Z(basis_r, x, theta) == pytest.approx(expected, rel=1e-8)


def test_Z_continuous_in_x_at_zero(basis_r):
    for theta in (-1.0, 0.0, 1.7):
        below = Z(basis_r, -1e-9, theta)
        above = Z(basis_r, 1e-9, theta)
        assert below == pytest.approx(above, abs=1e-7)


def test_Z_pole_guard(basis_r):
    with pytest.raises(ParameterError):
        Z(basis_r, 1.0, -2.5)
