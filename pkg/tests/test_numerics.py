"""
数值核心测试: 积分、求根、极小化、有限差分
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.special import ndtr

from backend.config_manager import get_config_manager
from backend.error_handler import IntegrationError, MinimizationError, ParameterError, RootFindingError
from backend.numerics import (
    DEFAULT_TOLERANCE,
    Interval,
    ToleranceConfig,
    bracket_root,
    central_difference,
    derivative_check,
    fd_step,
    find_root,
    integrate,
    minimize_scalar,
    second_difference,
)

PHI_1 = 0.8413447461
SQRT_2PI = math.sqrt(2.0 * math.pi)


def gauss(x: float) -> float:
    return math.exp(-0.5 * x * x)


def sech3(u: float) -> float:
    e = math.exp(-abs(u))
    return (2.0 * e / (1.0 + e * e)) ** 3


# ==================== 积分 ====================

def test_integrate_whole_line_gaussian():
    result = integrate(gauss, Interval.real_line())
    assert result.value == pytest.approx(SQRT_2PI, rel=1e-10)
    assert result.evaluations > 0


def test_integrate_half_lines():
    right = integrate(lambda x: math.exp(-x), Interval(0.0, math.inf)).value
    left = integrate(lambda x: math.exp(x), Interval(-math.inf, 0.0)).value
    assert right == pytest.approx(1.0, rel=1e-10)
    assert left == pytest.approx(1.0, rel=1e-10)


def test_integrate_shifted_center_and_scale():
    """中心远离原点的窄峰"""
    f = lambda x: math.exp(-50.0 * (x - 30.0) ** 2)
    result = integrate(f, Interval.real_line(), center=30.0, scale=0.1)
    assert result.value == pytest.approx(math.sqrt(math.pi / 50.0), rel=1e-9)


def test_integrate_finite_with_breakpoints():
    result = integrate(lambda x: abs(x - 0.3), Interval(0.0, 1.0), points=[0.3])
    assert result.value == pytest.approx(0.5 * (0.3 ** 2 + 0.7 ** 2), abs=1e-12)


def test_integrate_nan_reports_sample_point():
    with pytest.raises(IntegrationError) as info:
        integrate(lambda x: float("nan") if x > 0.5 else 1.0, Interval(0.0, 1.0))
    assert info.value.sample_point is not None
    assert info.value.sample_point > 0.5


def test_integrate_rejects_bad_scale():
    with pytest.raises(ParameterError):
        integrate(lambda x: 1.0, Interval(0.0, 1.0), scale=0.0)


def test_integrate_sech_cubed():
    """∫ sech³ = π/2"""
    result = integrate(sech3, Interval.real_line())
    assert result.value == pytest.approx(0.5 * math.pi, abs=1e-10)


@pytest.mark.parametrize("f", [gauss, sech3], ids=["gauss", "sech3"])
def test_integrate_even_function_is_twice_half_line(f):
    whole = integrate(f, Interval.real_line()).value
    half = integrate(f, Interval(0.0, math.inf)).value
    assert abs(whole - 2.0 * half) <= 2.0 * DEFAULT_TOLERANCE.abs_tol


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (2.0, -3.0), (0.5, 0.25), (-1.5, 4.0)])
def test_integrate_is_linear(alpha, beta):
    line = Interval.real_line()
    combined = integrate(lambda x: alpha * gauss(x) + beta * sech3(x), line).value
    separate = alpha * integrate(gauss, line).value + beta * integrate(sech3, line).value
    assert abs(combined - separate) <= 3.0 * DEFAULT_TOLERANCE.abs_tol


def _fake_quad(abserr):
    def quad(g, a, b, **kwargs):
        return 1.0, abserr, {"neval": 63}, "roundoff error is detected"
    return SimpleNamespace(quad=quad)


def test_integrate_rejects_warning_above_tolerance(monkeypatch):
    # rel_tol·|value| = 1e-10
    monkeypatch.setattr("backend.numerics.sp_integrate", _fake_quad(5e-10))
    with pytest.raises(IntegrationError) as info:
        integrate(lambda x: 1.0, Interval(0.0, 1.0))
    assert info.value.partial_estimate == 1.0


def test_integrate_accepts_warning_within_tolerance(monkeypatch):
    monkeypatch.setattr("backend.numerics.sp_integrate", _fake_quad(5e-11))
    result = integrate(lambda x: 1.0, Interval(0.0, 1.0))
    assert result.value == 1.0
    assert result.error_estimate == 5e-11


def test_integrate_subdivision_limit_fails():
    tol = ToleranceConfig(max_evals=100)
    with pytest.raises(IntegrationError):
        integrate(lambda x: x * math.sin(1e4 * x), Interval(0.0, 1.0), tol)


def test_interval_validation():
    with pytest.raises(ParameterError):
        Interval(1.0, 0.0)
    with pytest.raises(ParameterError):
        Interval(float("nan"), 1.0)
    assert Interval(0.0, math.inf).hi_infinite
    assert not Interval(0.0, math.inf).is_finite
    assert Interval(0.0, 1.0).clip(2.5) == 1.0
    assert Interval(0.0, math.inf).clip(-3.0) == 0.0


def test_tolerance_config_positive():
    with pytest.raises(ParameterError):
        ToleranceConfig(abs_tol=-1.0)
    assert DEFAULT_TOLERANCE.rel_tol == 1e-10


# ==================== 求根 ====================

def test_find_root_sqrt2():
    root = find_root(lambda x: x * x - 2.0, Interval(0.0, 2.0))
    assert root == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_find_root_without_sign_change():
    with pytest.raises(RootFindingError) as info:
        find_root(lambda x: x * x + 1.0, Interval(0.0, 1.0))
    assert info.value.last_bracket == (0.0, 1.0)


def test_find_root_requires_finite_bracket():
    with pytest.raises(RootFindingError):
        find_root(lambda x: x, Interval(-math.inf, 1.0))


def test_bracket_root_expands_to_far_root():
    bracket = bracket_root(lambda x: x - 100.0, 0.0, 1.0)
    assert bracket.lo <= 100.0 <= bracket.hi
    assert find_root(lambda x: x - 100.0, bracket) == pytest.approx(100.0, abs=1e-10)


def test_bracket_root_respects_open_limits():
    """根靠近开区间端点时括号不得越界"""
    f = lambda x: x - 0.999
    bracket = bracket_root(f, 0.0, 1.0, limits=Interval(-1.0, 1.0))
    assert -1.0 < bracket.lo <= 0.999 <= bracket.hi < 1.0


def test_find_root_normal_quantile():
    root = find_root(lambda x: float(ndtr(x)) - PHI_1, Interval(0.0, 3.0))
    assert root == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("f,bracket", [
    (lambda x: float(ndtr(x)) - PHI_1, Interval(0.0, 3.0)),
    (lambda x: x ** 3 - 2.0 * x - 5.0, Interval(2.0, 3.0)),
], ids=["quantile", "cubic"])
def test_find_root_is_idempotent_on_tighter_bracket(f, bracket):
    root = find_root(f, bracket)
    tighter = Interval(root - 1e-6, root + 1e-6)
    again = find_root(f, tighter)
    assert tighter.contains(again)
    assert abs(again - root) <= DEFAULT_TOLERANCE.abs_tol


# ==================== 极小化 ====================

def test_minimize_bounded_quadratic():
    x, fx = minimize_scalar(lambda x: (x - 0.3) ** 2 + 1.0, Interval(-1.0, 1.0))
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(1.0, abs=1e-10)


def test_minimize_prefers_tail_limit():
    f = lambda x: 1.0 + 1.0 / (1.0 + x * x)
    x, fx = minimize_scalar(f, Interval.real_line(), window=Interval(-5.0, 5.0),
                            tail_values={-math.inf: 1.0, math.inf: 1.0})
    assert math.isinf(x)
    assert fx == 1.0


def test_minimize_unbounded_needs_window():
    with pytest.raises(MinimizationError):
        minimize_scalar(lambda x: x * x, Interval.real_line())


# ==================== 有限差分 ====================

def test_central_and_second_difference():
    assert central_difference(math.sin, 0.3) == pytest.approx(math.cos(0.3), abs=1e-8)
    assert second_difference(math.exp, 0.0) == pytest.approx(1.0, abs=1e-6)


def test_derivative_check_accepts_and_rejects():
    points = np.linspace(-1.0, 1.0, 5)
    assert derivative_check(math.sin, math.cos, points, tol=1e-7)
    assert not derivative_check(math.sin, math.sin, points, tol=1e-7)


def test_difference_steps_follow_config():
    get_config_manager().update({"fd_step": 1e-2, "fd_step_second": 1e-2})
    h = 2e-2
    assert fd_step(1.0) == pytest.approx(h, rel=1e-15)
    assert fd_step(1.0, 1e-5) == pytest.approx(2e-5, rel=1e-15)
    # x³ 与 x⁴ 的差分截断误差分别为 h² 与 2h²
    assert central_difference(lambda x: x ** 3, 1.0) == pytest.approx(3.0 + h * h, rel=1e-12)
    assert second_difference(lambda x: x ** 4, 1.0) == pytest.approx(12.0 + 2.0 * h * h, rel=1e-10)


# ==================== 纯函数性 ====================

def test_operations_are_bit_identical_on_repeat():
    line = Interval.real_line()
    first, second = integrate(sech3, line), integrate(sech3, line)
    assert first == second
    assert first.value.hex() == second.value.hex()

    f = lambda x: x ** 3 - 2.0 * x - 5.0
    assert find_root(f, Interval(2.0, 3.0)).hex() == find_root(f, Interval(2.0, 3.0)).hex()

    g = lambda x: (x - 0.3) ** 2 + math.cos(5.0 * x)
    assert minimize_scalar(g, Interval(-1.0, 1.0)) == minimize_scalar(g, Interval(-1.0, 1.0))
