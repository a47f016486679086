"""
模型轮廓测试: 闭式常数、对称性、不动点、导数、有界直径分支
"""

import math

import numpy as np
import pytest

from backend.error_handler import DomainError, ParameterError
from backend.model_params import ModelParams, NeedleDensityParams, ProfileBranch
from backend.model_profiles import (
    ProfileCurve,
    ProfileDiagnostics,
    check_theta,
    compute_profile_curve,
    cosh_cdf,
    cosh_density,
    cosh_quantile,
    fixed_point_H,
    gaussian_cdf,
    gaussian_density,
    gaussian_gap_lower_bound,
    gaussian_quantile,
    k1_window_value,
    k3_closed_form,
    k3_value,
    model_mass_closed_form,
    model_mass_neg,
    needle_density,
    needle_lower_bound,
    needle_minimax_objective,
    profile_gauss_D,
    profile_gauss_inf,
    profile_gauss_inf_derivative,
    profile_neg_D,
    profile_neg_inf,
    profile_neg_inf_derivative,
    profile_point,
)
from backend.numerics import Interval, central_difference, integrate

M_1_MINUS2 = math.sqrt(3.0) * math.pi / 2.0
INV_M_1_MINUS2 = 0.3675525969
PHI_1 = 0.8413447461
DENSITY_1 = 0.2419707245
GAUSS_D2_HALF = 0.5845
K3_AT_ONE = 0.3723

THETAS = [round(0.1 * i, 10) for i in range(1, 10)]
DERIVATIVE_THETAS = [0.2, 0.5, 0.8]
FD_STEP = 1e-4


# ==================== 闭式常数 ====================

def test_gaussian_constants():
    assert gaussian_cdf(1.0, 1.0) == pytest.approx(PHI_1, abs=1e-10)
    assert gaussian_density(1.0, 1.0) == pytest.approx(DENSITY_1, abs=1e-10)
    assert profile_gauss_inf(1.0, PHI_1) == pytest.approx(DENSITY_1, abs=1e-9)


def test_model_mass_minus_two():
    params = ModelParams(1.0, -2.0)
    assert model_mass_closed_form(params) == pytest.approx(M_1_MINUS2, rel=1e-12)
    assert model_mass_neg(params) == pytest.approx(M_1_MINUS2, rel=1e-10)
    assert profile_neg_inf(params, 0.5) == pytest.approx(INV_M_1_MINUS2, abs=1e-9)


@pytest.mark.parametrize("K", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("N", [-2.0, -5.0, -10.0])
def test_neg_profile_at_half_is_inverse_mass(K, N):
    params = ModelParams(K, N)
    assert model_mass_neg(params) == pytest.approx(model_mass_closed_form(params), rel=1e-9)
    assert profile_neg_inf(params, 0.5) == pytest.approx(1.0 / model_mass_closed_form(params), rel=1e-9)
    # 端点附近趋于 0
    assert profile_neg_inf(params, 1e-6) < 1e-3


@pytest.mark.parametrize("K", [0.5, 1.0, 2.0])
def test_gaussian_profile_at_half(K):
    assert profile_gauss_inf(K, 0.5) == pytest.approx(math.sqrt(K / (2.0 * math.pi)), rel=1e-12)


def test_cosh_cdf_matches_quadrature(neg_params):
    s = 0.7
    numer = integrate(lambda x: cosh_density(neg_params, x), Interval(-math.inf, s)).value
    assert cosh_cdf(neg_params, s) == pytest.approx(numer / M_1_MINUS2, abs=1e-10)
    assert cosh_cdf(neg_params, 0.0) == pytest.approx(0.5, abs=1e-14)


def test_quantiles_are_antisymmetric(neg_params):
    for theta in (0.05, 0.3):
        assert cosh_quantile(neg_params, theta) == pytest.approx(-cosh_quantile(neg_params, 1.0 - theta), abs=1e-11)
        assert gaussian_quantile(2.0, theta) == pytest.approx(-gaussian_quantile(2.0, 1.0 - theta), abs=1e-11)


@pytest.mark.parametrize("theta", [0.0, 1.0, -0.1, 1.5])
def test_theta_outside_open_interval(theta):
    with pytest.raises(DomainError):
        check_theta(theta)
    with pytest.raises(DomainError):
        profile_point(ModelParams(1.0), theta)


# ==================== 针线不动点 ====================

@pytest.mark.parametrize("theta", THETAS)
def test_fixed_point_gaussian(theta):
    K = 1.5
    H = fixed_point_H(ModelParams(K), theta)
    a = gaussian_quantile(K, theta)
    assert abs(a + H / K) <= 1e-8


@pytest.mark.parametrize("theta", THETAS)
def test_fixed_point_negative(neg_params, theta):
    H = fixed_point_H(neg_params, theta)
    rs = neg_params.sqrt_sigma
    c = cosh_quantile(neg_params, theta)
    assert abs(c - math.atanh(H / ((neg_params.N - 1.0) * rs)) / rs) <= 1e-8


@pytest.mark.parametrize("params", [ModelParams(1.5), ModelParams(1.0, -2.0)], ids=["gauss", "neg"])
@pytest.mark.parametrize("theta", [0.2, 0.5, 0.9])
def test_needle_density_splits_mass_at_zero(params, theta):
    """H = H_θ 时 J 在 0 两侧的质量比为 θ : 1−θ"""
    ndp = NeedleDensityParams(params, fixed_point_H(params, theta))
    J = lambda t: needle_density(ndp, t)
    left = integrate(J, Interval(-math.inf, 0.0)).value
    right = integrate(J, Interval(0.0, math.inf)).value
    total = left + right
    assert left / theta == pytest.approx(total, rel=1e-8)
    assert right / (1.0 - theta) == pytest.approx(total, rel=1e-8)


@pytest.mark.parametrize("params", [ModelParams(1.0), ModelParams(2.0, -5.0)], ids=["gauss", "neg"])
@pytest.mark.parametrize("theta", [0.2, 0.5, 0.7])
def test_needle_lower_bound_equals_profile(params, theta):
    value, _ = profile_point(params, theta)
    assert needle_lower_bound(params, theta) == pytest.approx(value, rel=1e-8)


def test_minimax_objective_minimal_at_fixed_point(neg_params):
    theta = 0.3
    H = fixed_point_H(neg_params, theta)
    at_fixed = needle_minimax_objective(neg_params, theta, H)
    assert at_fixed == pytest.approx(1.0 / profile_neg_inf(neg_params, theta), rel=1e-8)
    for delta in (-0.1, 0.1):
        assert needle_minimax_objective(neg_params, theta, H + delta) > at_fixed


# ==================== 导数 ====================

@pytest.mark.parametrize("theta", DERIVATIVE_THETAS)
def test_gaussian_derivative(theta):
    numeric = central_difference(lambda t: profile_gauss_inf(1.0, t), theta, FD_STEP)
    assert numeric == pytest.approx(profile_gauss_inf_derivative(1.0, theta), abs=1e-6)


@pytest.mark.parametrize("theta", DERIVATIVE_THETAS)
def test_negative_derivative(neg_params, theta):
    numeric = central_difference(lambda t: profile_neg_inf(neg_params, t), theta, FD_STEP)
    assert numeric == pytest.approx(profile_neg_inf_derivative(neg_params, theta), abs=1e-6)


# ==================== 截断高斯 ====================

def test_gaussian_bounded_diameter_value():
    value, xi = profile_gauss_D(1.0, 2.0, 0.5)
    assert value == pytest.approx(GAUSS_D2_HALF, abs=1e-3)
    # 1/(√(2π)·erf(1/√2))
    assert value == pytest.approx(1.0 / (math.sqrt(2.0 * math.pi) * math.erf(1.0 / math.sqrt(2.0))), abs=1e-5)
    assert xi == pytest.approx(-1.0, abs=1e-4)


@pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
def test_gaussian_gap_lower_bound(theta):
    bound = gaussian_gap_lower_bound(1.0, 2.0)
    gap = profile_gauss_D(1.0, 2.0, theta)[0] - profile_gauss_inf(1.0, theta)
    assert bound > 0
    assert gap >= bound


# ==================== 有界直径负维数 ====================

def test_k3_at_one(neg_params):
    assert k3_closed_form(neg_params, 1.0, 1.0) == pytest.approx(K3_AT_ONE, abs=1e-4)


@pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
def test_k3_root_matches_closed_form(neg_params, theta):
    value, d3 = k3_value(neg_params, 1.0, theta)
    assert value == pytest.approx(k3_closed_form(neg_params, 1.0, theta), rel=1e-10)
    assert 0.0 < d3 < 1.0


def test_k3_is_linear(neg_params):
    lam = neg_params.exp_rate
    slope = (k3_closed_form(neg_params, 2.0, 0.8) - k3_closed_form(neg_params, 2.0, 0.3)) / 0.5
    assert slope == pytest.approx(lam, rel=1e-12)
    with pytest.raises(DomainError):
        k3_closed_form(neg_params, 2.0, 1.2)


@pytest.mark.parametrize("theta", [0.3, 0.5])
def test_k1_tails_approach_exponential_window(neg_params, theta):
    D = 1.0
    right, _ = k1_window_value(neg_params, D, 20.0, theta)
    left, _ = k1_window_value(neg_params, D, -20.0, theta)
    assert right == pytest.approx(k3_closed_form(neg_params, D, theta), rel=1e-6)
    assert left == pytest.approx(k3_closed_form(neg_params, D, 1.0 - theta), rel=1e-6)


def test_bounded_diameter_dominates(neg_params):
    value, branch, _ = profile_neg_D(neg_params, 1.0, 0.5)
    assert value > profile_neg_inf(neg_params, 0.5)
    assert branch in (ProfileBranch.K1, ProfileBranch.K2, ProfileBranch.K3)


# ==================== 曲线 ====================

@pytest.mark.parametrize("params", [ModelParams(1.0), ModelParams(1.0, -2.0)], ids=["gauss", "neg"])
def test_profile_curve_symmetry(params):
    curve = compute_profile_curve(params, THETAS, max_workers=2)
    assert curve.thetas == tuple(THETAS)
    assert curve.symmetry_defect() < 1e-10
    rows = curve.to_rows()
    assert [r["theta"] for r in rows] == THETAS
    assert {"theta", "value", "branch", "xi_star", "H_theta"} <= set(rows[0])


def test_profile_curve_sorts_input():
    curve = compute_profile_curve(ModelParams(1.0), [0.7, 0.2, 0.5], max_workers=1)
    assert curve.thetas == (0.2, 0.5, 0.7)
    assert np.all(np.diff(curve.thetas) > 0)


def test_profile_curve_rejects_decreasing():
    diag = ProfileDiagnostics(ProfileBranch.GAUSS_INF)
    with pytest.raises(ParameterError):
        ProfileCurve(ModelParams(1.0), (0.6, 0.4), (0.3, 0.3), (diag, diag))


def test_profile_point_branches():
    _, diag = profile_point(ModelParams(1.0, math.inf, 2.0), 0.5)
    assert diag.branch is ProfileBranch.GAUSS_D
    _, diag = profile_point(ModelParams(1.0, -2.0), 0.5)
    assert diag.branch is ProfileBranch.NEG_INF
    assert diag.H_theta == pytest.approx(0.0, abs=1e-9)
