"""
有界直径轮廓的严格优势证书

对每个 (K, N, D, θ) 单元计算 K1、K2、K3 与 I_(K,N,∞) 的差距, 并给出
辅助函数 m0、m1、h_ξ、d̄(ξ) 与它们的尾部极限, 用于核对

    min{K1, K2, K3}(θ) − I_(K,N,∞)(θ) > 0
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

from loguru import logger

from backend.error_handler import ParameterError
from backend.model_params import ModelParams
from backend.model_profiles import (
    DEFAULT_WINDOW,
    BranchValues,
    WindowSettings,
    check_theta,
    cosh_cdf,
    cosh_density,
    cosh_mass,
    d_bar,
    gauss_window_value,
    gaussian_gap_lower_bound,
    k1_window_value,
    k2_window_value,
    k3_closed_form,
    log_cosh,
    log_sinh,
    model_mass_neg,
    neg_D_branches,
    profile_gauss_D,
    profile_gauss_inf,
    profile_neg_inf,
)
from backend.numerics import DEFAULT_TOLERANCE, Interval, ToleranceConfig, find_root, integrate


class AppendixGaps:
    """
    固定 (params, D, θ) 的辅助函数集合

    φ1 = cosh^{N−1}(√σ·), φ2 = sinh^{N−1}(√σ·)
    m0(ξ) = ∫_ξ^{ξ+D} φ1/φ1(ξ), m1(ξ) = ∫_ξ^{ξ+D} φ1/φ1(ξ+D),
    m_sinh(ξ) = ∫_ξ^{ξ+D} φ2/φ2(ξ+D)
    """

    def __init__(self, params: ModelParams, D: float, theta: float,
                 tol: ToleranceConfig = DEFAULT_TOLERANCE):
        params.require_negative()
        check_theta(theta)
        if not (math.isfinite(D) and D > 0):
            raise ParameterError(f"D must be finite and positive, got {D}")
        self.params = params
        self.D = D
        self.theta = theta
        self.tol = tol
        self._I = profile_neg_inf(params, theta, tol)

    @property
    def I_inf(self) -> float:
        return self._I

    @property
    def mu(self) -> float:
        """μ = (1−N)√σ > 0"""
        return -self.params.exp_rate

    # ==================== K3 ====================

    def h3(self, theta: Optional[float] = None) -> float:
        """h(θ) = K3(θ) − I(θ); θ = 1 时取闭式极限 K3(1) (I(1) = 0)"""
        theta = self.theta if theta is None else theta
        if theta == 1.0:
            return k3_closed_form(self.params, self.D, 1.0)
        return k3_closed_form(self.params, self.D, theta) - profile_neg_inf(self.params, theta, self.tol)

    # ==================== 窗口比值 ====================

    def _cosh_ratio_integral(self, xi: float, ref: float) -> float:
        rs, p = self.params.sqrt_sigma, self.params.N - 1.0
        log_ref = log_cosh(rs * ref)
        integrand = lambda s: math.exp(p * (log_cosh(rs * s) - log_ref))
        return integrate(integrand, Interval(xi, xi + self.D), self.tol).value

    def m0(self, xi: float) -> float:
        """m0(ξ) = 1/g_ξ(0), 关于 ξ 单调递减"""
        return self._cosh_ratio_integral(xi, xi)

    def m1(self, xi: float) -> float:
        """m1(ξ) = 1/g_ξ(1), 关于 ξ 单调递增"""
        return self._cosh_ratio_integral(xi, xi + self.D)

    def m_sinh(self, xi: float) -> float:
        """sinh 窗口的 1/g_ξ(1) (ξ > 0)"""
        rs, p = self.params.sqrt_sigma, self.params.N - 1.0
        log_ref = log_sinh(rs * (xi + self.D))
        integrand = lambda s: math.exp(p * (log_sinh(rs * s) - log_ref))
        return integrate(integrand, Interval(xi, xi + self.D), self.tol).value

    def window_ratio_limit(self) -> float:
        """
        lim_{ξ→−∞} m0 = lim_{ξ→∞} m1 = lim_{ξ→∞} m_sinh = (e^{μD} − 1)/μ

        其倒数 μ/(e^{μD} − 1) 即 K3(1)
        """
        return math.expm1(self.mu * self.D) / self.mu

    def tail_limits(self) -> Dict[str, float]:
        limit = self.window_ratio_limit()
        return {"m0_minus_inf": limit, "m1_plus_inf": limit, "m_sinh_plus_inf": limit,
                "g_endpoint_lower_bound": 1.0 / limit}

    # ==================== h_ξ ====================

    def h_xi_cosh(self, xi: float, theta: Optional[float] = None) -> float:
        """h_ξ(θ) = g_ξ(θ) − I(θ), cosh 窗口"""
        theta = self.theta if theta is None else theta
        value, _ = k1_window_value(self.params, self.D, xi, theta, self.tol)
        I = self._I if theta == self.theta else profile_neg_inf(self.params, theta, self.tol)
        return value - I

    def h_xi_sinh(self, xi: float, theta: Optional[float] = None) -> float:
        """h_ξ(θ) = g_ξ(θ) − I(θ), sinh 窗口 (ξ > 0)"""
        theta = self.theta if theta is None else theta
        value, _ = k2_window_value(self.params, self.D, xi, theta, self.tol)
        I = self._I if theta == self.theta else profile_neg_inf(self.params, theta, self.tol)
        return value - I

    def h_xi_at(self, xi: float) -> Dict[str, float]:
        """给定 ξ 处两类窗口的 h_ξ(θ) (ξ ≤ 0 时 sinh 窗口无定义)"""
        out = {"cosh": self.h_xi_cosh(xi)}
        if xi > 0:
            out["sinh"] = self.h_xi_sinh(xi)
        return out

    def d_bar(self, xi: float) -> float:
        return d_bar(self.params, self.D, xi, self.theta)

    def crossing_gap(self, xi: float) -> Tuple[float, float, float]:
        """
        cosh 窗口与模型分位数相交处的差距

        θ0 满足 c(θ0) = d_{1,ξ}(θ0) = s0, 此时
        h_ξ(θ0) = φ1(s0)·(1/∫_ξ^{ξ+D}φ1 − 1/m_{K,N}) > 0

        Returns:
            (θ0, s0, h_ξ(θ0))
        """
        params, D = self.params, self.D
        window = cosh_mass(params, xi, xi + D)
        residual = lambda s: cosh_mass(params, xi, s) / window - cosh_cdf(params, s)
        s0 = find_root(residual, Interval(xi, xi + D), self.tol)
        theta0 = cosh_cdf(params, s0)
        mass = model_mass_neg(params, self.tol)
        gap = cosh_density(params, s0) / mass * (1.0 / window - 1.0)
        return theta0, s0, gap


def appendix_gap_functions(params: ModelParams, D: float, theta: float,
                           tol: ToleranceConfig = DEFAULT_TOLERANCE) -> AppendixGaps:
    return AppendixGaps(params, D, theta, tol)


# ==================== 单元证书 ====================

@dataclass(frozen=True)
class AppendixCell:
    """一个 (K, N, D, θ) 单元的证书行"""
    K: float
    N: float
    D: float
    theta: float
    K1: float
    K2: float
    K3: float
    I_inf: float
    min_gap: float
    K1_xi: float
    K2_xi: float
    K1_source: str
    K2_source: str

    @property
    def passed(self) -> bool:
        return self.min_gap > 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class GaussianCell:
    """截断高斯单元: I_(K,∞,D) − I_(K,∞,∞) 及其确定下界"""
    K: float
    D: float
    theta: float
    I_D: float
    I_inf: float
    gap: float
    xi_star: float
    gap_lower_bound: float

    @property
    def passed(self) -> bool:
        return self.gap > 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def certify_cell(params: ModelParams, D: float, theta: float,
                 tol: ToleranceConfig = DEFAULT_TOLERANCE,
                 settings: WindowSettings = DEFAULT_WINDOW) -> AppendixCell:
    """计算 K1、K2、K3 与 I_(K,N,∞) 的最小差距"""
    branches: BranchValues = neg_D_branches(params, D, theta, tol, settings)
    I = profile_neg_inf(params, theta, tol)
    gap = min(branches.K1, branches.K2, branches.K3) - I
    if gap <= 0:
        logger.warning(f"[AppendixGaps] Non-positive gap {gap:.3e} at K={params.K}, N={params.N}, D={D}, theta={theta}")
    return AppendixCell(
        K=params.K, N=params.N, D=D, theta=theta,
        K1=branches.K1, K2=branches.K2, K3=branches.K3, I_inf=I, min_gap=gap,
        K1_xi=branches.K1_xi, K2_xi=branches.K2_xi,
        K1_source=BranchValues.provenance(branches.K1_xi),
        K2_source=BranchValues.provenance(branches.K2_xi),
    )


def certify_gaussian_cell(K: float, D: float, theta: float,
                          tol: ToleranceConfig = DEFAULT_TOLERANCE,
                          settings: WindowSettings = DEFAULT_WINDOW) -> GaussianCell:
    """截断高斯轮廓对高斯轮廓的严格优势"""
    value, xi = profile_gauss_D(K, D, theta, tol, settings)
    I = profile_gauss_inf(K, theta, tol)
    return GaussianCell(K=K, D=D, theta=theta, I_D=value, I_inf=I, gap=value - I,
                        xi_star=xi, gap_lower_bound=gaussian_gap_lower_bound(K, D))


def gauss_h_xi(K: float, D: float, xi: float, theta: float,
               tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """f_{ξ,D}(θ) − I_(K,∞,∞)(θ)"""
    return gauss_window_value(K, D, xi, theta, tol)[0] - profile_gauss_inf(K, theta, tol)
