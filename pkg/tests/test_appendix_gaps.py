"""
有界直径证书测试: 窗口比值的尾部极限、单调性、交点差距与单元证书
"""

import math

import numpy as np
import pytest

from backend.appendix_gaps import (
    AppendixGaps,
    appendix_gap_functions,
    certify_cell,
    certify_gaussian_cell,
    gauss_h_xi,
)
from backend.error_handler import DomainError, ParameterError
from backend.model_params import ModelParams
from backend.model_profiles import k3_closed_form

K3_AT_ONE = 0.3723
GAUSS_GAP_D2_HALF = 0.1854

GRID_THETAS = [round(0.05 * i, 10) for i in range(1, 20)]


@pytest.fixture(scope="module")
def gaps():
    return appendix_gap_functions(ModelParams(1.0, -2.0), 1.0, 0.5)


# ==================== 尾部极限 ====================

def test_window_ratio_limit_formula(gaps):
    mu = gaps.mu
    assert mu == pytest.approx(3.0 / math.sqrt(3.0), rel=1e-14)
    assert gaps.window_ratio_limit() == pytest.approx(math.expm1(mu) / mu, rel=1e-14)
    limits = gaps.tail_limits()
    assert limits["g_endpoint_lower_bound"] == pytest.approx(k3_closed_form(gaps.params, 1.0, 1.0), rel=1e-12)


def test_window_ratios_reach_limit(gaps):
    limit = gaps.window_ratio_limit()
    assert gaps.m0(-20.0) == pytest.approx(limit, rel=1e-7)
    assert gaps.m1(20.0) == pytest.approx(limit, rel=1e-7)
    assert gaps.m_sinh(20.0) == pytest.approx(limit, rel=1e-7)


def test_window_ratio_monotonicity(gaps):
    xs = np.linspace(-5.0, 5.0, 21)
    m0 = np.array([gaps.m0(x) for x in xs])
    m1 = np.array([gaps.m1(x) for x in xs])
    assert np.all(np.diff(m0) < 0)
    assert np.all(np.diff(m1) > 0)


# ==================== h 函数 ====================

def test_h3_endpoint(gaps):
    assert gaps.h3(1.0) == pytest.approx(K3_AT_ONE, abs=1e-4)
    assert gaps.h3(0.99) >= gaps.h3(1.0) - 1e-12
    assert gaps.h3(0.5) > gaps.h3(1.0)


def test_crossing_gap_matches_h_xi(gaps):
    theta0, s0, gap = gaps.crossing_gap(-0.5)
    assert 0.0 < theta0 < 1.0
    assert -0.5 < s0 < 0.5
    assert gap > 0
    assert gaps.h_xi_cosh(-0.5, theta0) == pytest.approx(gap, abs=1e-9)


def test_h_xi_at_keys(gaps):
    assert set(gaps.h_xi_at(-0.3)) == {"cosh"}
    values = gaps.h_xi_at(0.4)
    assert set(values) == {"cosh", "sinh"}
    assert all(v > 0 for v in values.values())


def test_d_bar_bounds_window(gaps):
    xi = 0.7
    assert xi < gaps.d_bar(xi) < xi + gaps.D


def test_gaps_validation():
    with pytest.raises(ParameterError):
        AppendixGaps(ModelParams(1.0), 1.0, 0.5)
    with pytest.raises(ParameterError):
        AppendixGaps(ModelParams(1.0, -2.0), math.inf, 0.5)
    with pytest.raises(DomainError):
        AppendixGaps(ModelParams(1.0, -2.0), 1.0, 1.0)


# ==================== 单元证书 ====================

@pytest.mark.parametrize("theta", [0.5, 0.99])
def test_certify_cell(theta):
    params = ModelParams(1.0, -2.0)
    cell = certify_cell(params, 1.0, theta)
    assert cell.passed
    assert cell.min_gap == pytest.approx(min(cell.K1, cell.K2, cell.K3) - cell.I_inf, abs=1e-15)
    assert cell.K3 - cell.I_inf >= k3_closed_form(params, 1.0, 1.0) - 1e-9
    row = cell.to_dict()
    assert row["K1_source"] in ("window", "tail+inf", "tail-inf")
    assert row["theta"] == theta


def test_certify_gaussian_cell():
    cell = certify_gaussian_cell(1.0, 2.0, 0.5)
    assert cell.passed
    assert cell.gap == pytest.approx(GAUSS_GAP_D2_HALF, abs=1e-4)
    assert cell.gap >= cell.gap_lower_bound > 0
    assert gauss_h_xi(1.0, 2.0, cell.xi_star, 0.5) == pytest.approx(cell.gap, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("N", [-2.0, -5.0, -10.0])
@pytest.mark.parametrize("D", [0.5, 1.0, 2.0, 5.0])
def test_default_grid_is_certified(N, D):
    params = ModelParams(1.0, N)
    for theta in GRID_THETAS:
        cell = certify_cell(params, D, theta)
        assert cell.passed, f"gap {cell.min_gap} at N={N}, D={D}, theta={theta}"
