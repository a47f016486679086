"""
模型等周轮廓模块

- I_(K,∞,∞): 高斯模型轮廓
- I_(K,∞,D): 截断高斯窗口上的下确界
- I_(K,N,∞): cosh^{N−1} 模型轮廓 (N < 0)
- I_(K,N,D) = min{K1, K2, K3}: cosh / sinh / 指数三类窗口
- 针线密度 J_H 与最优 H_θ 的不动点刻画
- θ 网格上的轮廓曲线 (并行计算, 结果按 θ 排序)

cosh^{N−1}(√σ s) 的分布函数用正则化不完全贝塔函数给出闭式:
    F(s) = I_v(a, a),  v = 1/(1 + e^{−2√σ s}),  a = (1−N)/2
"""

import functools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from loguru import logger
from scipy import special

from backend.error_handler import DomainError, ParameterError
from backend.model_params import ModelParams, NeedleDensityParams, ProfileBranch
from backend.numerics import (
    DEFAULT_TOLERANCE,
    Interval,
    ToleranceConfig,
    bracket_root,
    find_root,
    integrate,
    minimize_scalar,
)

LN2 = math.log(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)


# ==================== 搜索设置 ====================

@dataclass(frozen=True)
class WindowSettings:
    """K1/K2 下确界的搜索窗口设置"""
    window_scale: float = 10.0       # Ξ = window_scale/√σ + D
    xi_min_scale: float = 1e-6       # ξ_min = xi_min_scale/√σ
    prescan_points: int = 64

    @classmethod
    def from_app_config(cls, config=None) -> 'WindowSettings':
        if config is None:
            from backend.config_manager import get_config
            config = get_config()
        return cls(window_scale=config.k1_window_scale,
                   xi_min_scale=config.k2_xi_min_scale,
                   prescan_points=config.prescan_points)


DEFAULT_WINDOW = WindowSettings()


# ==================== 基础函数 ====================

def check_theta(theta: float) -> None:
    """θ 必须在开区间 (0,1) 内"""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta must lie in the open interval (0,1), got {theta}")


def log_cosh(x: float) -> float:
    """数值稳定的 log cosh"""
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - LN2


def log_sinh(x: float) -> float:
    """数值稳定的 log sinh (x > 0)"""
    return x + math.log(-math.expm1(-2.0 * x)) - LN2


def gaussian_density(K: float, s: float) -> float:
    """标准化 K-高斯密度 √(K/2π)·e^{−Ks²/2}"""
    if not K > 0:
        raise ParameterError(f"K must be > 0, got {K}")
    return math.sqrt(K) / SQRT_2PI * math.exp(-0.5 * K * s * s)


def gaussian_cdf(K: float, s: float) -> float:
    return float(special.ndtr(math.sqrt(K) * s))


def gaussian_sf(K: float, s: float) -> float:
    return float(special.ndtr(-math.sqrt(K) * s))


def gaussian_quantile(K: float, theta: float,
                      tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """求解 θ = Φ_K(a), 上半部分用生存函数以保留尾部精度"""
    check_theta(theta)
    if theta <= 0.5:
        residual = lambda a: gaussian_cdf(K, a) - theta
    else:
        residual = lambda a: (1.0 - theta) - gaussian_sf(K, a)
    bracket = bracket_root(residual, 0.0, 1.0 / math.sqrt(K))
    return find_root(residual, bracket, tol)


# ==================== 负维数模型密度 ====================

def cosh_log_density(params: ModelParams, s: float) -> float:
    """log cosh^{N−1}(√σ s) (未归一化)"""
    return (params.N - 1.0) * log_cosh(params.sqrt_sigma * s)


def cosh_density(params: ModelParams, s: float) -> float:
    return math.exp(cosh_log_density(params, s))


def _beta_shape(params: ModelParams) -> float:
    return 0.5 * (1.0 - params.N)


def cosh_cdf(params: ModelParams, s: float) -> float:
    """归一化 cosh^{N−1} 分布函数"""
    a = _beta_shape(params)
    return float(special.betainc(a, a, special.expit(2.0 * params.sqrt_sigma * s)))


def cosh_sf(params: ModelParams, s: float) -> float:
    """归一化 cosh^{N−1} 生存函数 (由对称性)"""
    a = _beta_shape(params)
    return float(special.betainc(a, a, special.expit(-2.0 * params.sqrt_sigma * s)))


def cosh_mass(params: ModelParams, lo: float, hi: float) -> float:
    """归一化测度 m((lo, hi)), 按区间所在一侧选择 F 或 1−F 以避免相消"""
    if hi <= lo:
        return 0.0
    if lo >= 0.0:
        return cosh_sf(params, lo) - cosh_sf(params, hi)
    if hi <= 0.0:
        return cosh_cdf(params, hi) - cosh_cdf(params, lo)
    return 1.0 - cosh_cdf(params, lo) - cosh_sf(params, hi)


@functools.lru_cache(maxsize=256)
def _model_mass_cached(K: float, N: float, tol: ToleranceConfig) -> float:
    params = ModelParams(K, N)
    result = integrate(lambda s: cosh_density(params, s), Interval.real_line(),
                       tol, scale=1.0 / params.sqrt_sigma)
    logger.debug(f"[ModelProfiles] m_(K={K},N={N}) = {result.value:.15g} ({result.evaluations} evals)")
    return result.value


def model_mass_neg(params: ModelParams, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """m_{K,N} = ∫ℝ cosh^{N−1}(√σ x) dx (求积)"""
    params.require_negative()
    return _model_mass_cached(params.K, params.N, tol)


def model_mass_closed_form(params: ModelParams) -> float:
    """m_{K,N} = 2^{−N}·B(a,a)/√σ, a = (1−N)/2"""
    params.require_negative()
    a = _beta_shape(params)
    return math.exp(-params.N * LN2 + special.betaln(a, a)) / params.sqrt_sigma


def cosh_quantile(params: ModelParams, theta: float,
                  tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """c(θ): 满足 F(c) = θ"""
    check_theta(theta)
    if theta <= 0.5:
        residual = lambda c: cosh_cdf(params, c) - theta
    else:
        residual = lambda c: (1.0 - theta) - cosh_sf(params, c)
    bracket = bracket_root(residual, 0.0, 1.0 / params.sqrt_sigma)
    return find_root(residual, bracket, tol)


# ==================== 无界直径轮廓 ====================

def profile_gauss_inf(K: float, theta: float,
                      tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """I_(K,∞,∞)(θ) = √(K/2π)·e^{−K a(θ)²/2}"""
    a = gaussian_quantile(K, theta, tol)
    return gaussian_density(K, a)


def profile_gauss_inf_derivative(K: float, theta: float,
                                 tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """I'(θ) = −K·a(θ)"""
    return -K * gaussian_quantile(K, theta, tol)


def profile_neg_inf(params: ModelParams, theta: float,
                    tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """I_(K,N,∞)(θ) = cosh^{N−1}(√σ c(θ))/m_{K,N}"""
    params.require_negative()
    c = cosh_quantile(params, theta, tol)
    return cosh_density(params, c) / model_mass_neg(params, tol)


def profile_neg_inf_derivative(params: ModelParams, theta: float,
                               tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """I'(θ) = (N−1)√σ·tanh(√σ c(θ))"""
    c = cosh_quantile(params, theta, tol)
    return params.exp_rate * math.tanh(params.sqrt_sigma * c)


# ==================== 截断高斯轮廓 ====================

def gauss_window_value(K: float, D: float, xi: float, theta: float,
                       tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Tuple[float, float]:
    """
    f_{ξ,D}(θ) = e^{−Kb²/2}/∫_ξ^{ξ+D} e^{−Ks²/2} ds

    Returns:
        (f_{ξ,D}(θ), b)
    """
    lo_cdf = gaussian_cdf(K, xi)
    mass = gaussian_cdf(K, xi + D) - lo_cdf
    residual = lambda b: (gaussian_cdf(K, b) - lo_cdf) / mass - theta
    b = find_root(residual, Interval(xi, xi + D), tol)
    window_integral = SQRT_2PI / math.sqrt(K) * mass
    return math.exp(-0.5 * K * b * b) / window_integral, b


def profile_gauss_D(K: float, D: float, theta: float,
                    tol: ToleranceConfig = DEFAULT_TOLERANCE,
                    settings: WindowSettings = DEFAULT_WINDOW) -> Tuple[float, float]:
    """
    I_(K,∞,D)(θ) = inf_{ξ∈[−D,0]} f_{ξ,D}(θ)

    Returns:
        (value, ξ*)
    """
    check_theta(theta)
    if not (math.isfinite(D) and D > 0):
        raise ParameterError(f"D must be finite and positive, got {D}")
    objective = lambda xi: gauss_window_value(K, D, xi, theta, tol)[0]
    xi_star, value = minimize_scalar(objective, Interval(-D, 0.0), tol,
                                     prescan_points=settings.prescan_points)
    return value, xi_star


def gaussian_gap_lower_bound(K: float, D: float) -> float:
    """
    I_(K,∞,D) − I_(K,∞,∞) 的确定下界

    e^{−KD²/2}·(1/∫_{−D}^{D} e^{−Ks²/2} ds − √(K/2π)) > 0
    """
    inner = SQRT_2PI / math.sqrt(K) * (1.0 - 2.0 * gaussian_sf(K, D))
    return math.exp(-0.5 * K * D * D) * (1.0 / inner - math.sqrt(K) / SQRT_2PI)


# ==================== 有界直径负维数轮廓 ====================

def k3_closed_form(params: ModelParams, D: float, theta: float) -> float:
    """
    指数模型 e^{λs} 在 [0,D] 上的轮廓, λ = (N−1)√σ; θ ∈ [0,1]

    K3(θ) = λ(1 + θ(e^{λD} − 1))/(e^{λD} − 1), 关于 θ 线性且 K3' = λ
    """
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0,1], got {theta}")
    lam = params.exp_rate
    em1 = math.expm1(lam * D)
    return lam * (1.0 + theta * em1) / em1


def k3_value(params: ModelParams, D: float, theta: float,
             tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Tuple[float, float]:
    """
    K_{3,D}(θ): 由 ∫_0^{d3} e^{λs} = θ ∫_0^D e^{λs} 求出 d3

    Returns:
        (value, d3)
    """
    check_theta(theta)
    lam = params.exp_rate
    em1 = math.expm1(lam * D)
    residual = lambda d: math.expm1(lam * d) / em1 - theta
    d3 = find_root(residual, Interval(0.0, D), tol)
    return lam * math.exp(lam * d3) / em1, d3


def k1_window_value(params: ModelParams, D: float, xi: float, theta: float,
                    tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Tuple[float, float]:
    """
    cosh 窗口: cosh^{N−1}(√σ d1)/∫_ξ^{ξ+D} cosh^{N−1}(√σ s) ds

    Returns:
        (value, d1)
    """
    window = cosh_mass(params, xi, xi + D)
    residual = lambda d: cosh_mass(params, xi, d) / window - theta
    d1 = find_root(residual, Interval(xi, xi + D), tol)
    return cosh_density(params, d1) / (model_mass_neg(params, tol) * window), d1


def d_bar(params: ModelParams, D: float, xi: float, theta: float) -> float:
    """d_{2,ξ}(θ) 的上界 (θ(ξ+D)^N + (1−θ)ξ^N)^{1/N}, ξ > 0"""
    N = params.N
    return (theta * (xi + D) ** N + (1.0 - theta) * xi ** N) ** (1.0 / N)


def sinh_window_integral(params: ModelParams, lo: float, hi: float, xi: float,
                         tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """∫_lo^hi sinh^{N−1}(√σ s) ds / sinh^{N−1}(√σ ξ)"""
    rs = params.sqrt_sigma
    p = params.N - 1.0
    ref = log_sinh(rs * xi)
    integrand = lambda s: math.exp(p * (log_sinh(rs * s) - ref))
    return integrate(integrand, Interval(lo, hi), tol).value


def k2_window_value(params: ModelParams, D: float, xi: float, theta: float,
                    tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Tuple[float, float]:
    """
    sinh 窗口 (ξ > 0): sinh^{N−1}(√σ d2)/∫_ξ^{ξ+D} sinh^{N−1}(√σ s) ds

    Returns:
        (value, d2)
    """
    if not xi > 0:
        raise DomainError(f"K2 windows require xi > 0, got {xi}")
    rs = params.sqrt_sigma
    window = sinh_window_integral(params, xi, xi + D, xi, tol)
    residual = lambda d: sinh_window_integral(params, xi, d, xi, tol) / window - theta

    upper = min(d_bar(params, D, xi, theta), xi + D)
    if not (upper > xi and residual(upper) >= 0.0):
        upper = xi + D
    d2 = find_root(residual, Interval(xi, upper), tol)
    value = math.exp((params.N - 1.0) * (log_sinh(rs * d2) - log_sinh(rs * xi))) / window
    return value, d2


def k1_tail_limits(params: ModelParams, D: float, theta: float) -> Dict[float, float]:
    """ξ→±∞ 时 cosh 窗口趋于指数窗口: 左尾 K3(1−θ), 右尾 K3(θ)"""
    return {-math.inf: k3_closed_form(params, D, 1.0 - theta),
            math.inf: k3_closed_form(params, D, theta)}


def k2_tail_limit(params: ModelParams, D: float, theta: float) -> Dict[float, float]:
    """ξ→∞ 时 sinh 窗口趋于指数窗口 K3(θ)"""
    return {math.inf: k3_closed_form(params, D, theta)}


@dataclass(frozen=True)
class BranchValues:
    """I_(K,N,D) 三个分支的值及其 ξ 来源 (±inf 表示尾部极限)"""
    K1: float
    K1_xi: float
    K2: float
    K2_xi: float
    K3: float

    def minimum(self) -> Tuple[float, ProfileBranch, Optional[float]]:
        candidates = [(self.K1, ProfileBranch.K1, self.K1_xi),
                      (self.K2, ProfileBranch.K2, self.K2_xi),
                      (self.K3, ProfileBranch.K3, None)]
        return min(candidates, key=lambda c: c[0])

    @staticmethod
    def provenance(xi: float) -> str:
        if xi == math.inf:
            return "tail+inf"
        if xi == -math.inf:
            return "tail-inf"
        return "window"


def neg_D_branches(params: ModelParams, D: float, theta: float,
                   tol: ToleranceConfig = DEFAULT_TOLERANCE,
                   settings: WindowSettings = DEFAULT_WINDOW) -> BranchValues:
    """分别计算 K1 (ξ∈ℝ)、K2 (ξ>0)、K3"""
    params.require_negative()
    check_theta(theta)
    if not (math.isfinite(D) and D > 0):
        raise ParameterError(f"D must be finite and positive, got {D}")

    xi_max = settings.window_scale / params.sqrt_sigma + D
    xi_min = settings.xi_min_scale / params.sqrt_sigma

    k1_xi, k1 = minimize_scalar(
        lambda xi: k1_window_value(params, D, xi, theta, tol)[0],
        Interval.real_line(), tol,
        window=Interval(-xi_max, xi_max),
        tail_values=k1_tail_limits(params, D, theta),
        prescan_points=settings.prescan_points,
    )
    k2_xi, k2 = minimize_scalar(
        lambda xi: k2_window_value(params, D, xi, theta, tol)[0],
        Interval(xi_min, math.inf), tol,
        window=Interval(xi_min, xi_max),
        tail_values=k2_tail_limit(params, D, theta),
        prescan_points=settings.prescan_points,
    )
    k3, _ = k3_value(params, D, theta, tol)
    return BranchValues(K1=k1, K1_xi=k1_xi, K2=k2, K2_xi=k2_xi, K3=k3)


def profile_neg_D(params: ModelParams, D: float, theta: float,
                  tol: ToleranceConfig = DEFAULT_TOLERANCE,
                  settings: WindowSettings = DEFAULT_WINDOW
                  ) -> Tuple[float, ProfileBranch, Optional[float]]:
    """
    I_(K,N,D)(θ) = min{K1, K2, K3}

    Returns:
        (value, 活跃分支, ξ*)
    """
    return neg_D_branches(params, D, theta, tol, settings).minimum()


# ==================== 针线密度与不动点 ====================

def needle_density(ndp: NeedleDensityParams, t: float) -> float:
    """
    J_H(t)

    高斯: e^{Ht − Kt²/2}; 负维数: (cosh(√σt) + β sinh(√σt))_+^{N−1}
    """
    params = ndp.params
    if params.is_gaussian:
        return math.exp(ndp.H * t - 0.5 * params.K * t * t)
    beta = ndp.beta
    x = params.sqrt_sigma * t
    log_base = _logaddexp(math.log1p(beta) + x, math.log1p(-beta) - x) - LN2
    return math.exp((params.N - 1.0) * log_base)


def _logaddexp(a: float, b: float) -> float:
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def _needle_halves(params: ModelParams, shape: float,
                   tol: ToleranceConfig) -> Tuple[float, float, float]:
    """
    按峰值缩放的 J 在 (−∞,0] 与 [0,∞) 上的积分

    shape: 高斯分支为 H, 负维数分支为 α
    Returns:
        (左积分, 右积分, log 缩放因子); 真实积分 = 缩放积分·exp(log 因子)
    """
    if params.is_gaussian:
        K, H = params.K, shape
        center = H / K
        scaled = lambda t: math.exp(-0.5 * K * (t - center) ** 2)
        log_factor = 0.5 * H * H / K
        scale = 1.0 / math.sqrt(K)
    else:
        rs, p, alpha = params.sqrt_sigma, params.N - 1.0, shape
        scaled = lambda t: math.exp(p * log_cosh(alpha + rs * t))
        log_factor = -p * log_cosh(alpha)
        scale = 1.0 / rs
    left = integrate(scaled, Interval(-math.inf, 0.0), tol, scale=scale).value
    right = integrate(scaled, Interval(0.0, math.inf), tol, scale=scale).value
    return left, right, log_factor


def _solve_shape(params: ModelParams, theta: float, tol: ToleranceConfig) -> float:
    """平衡方程 ∫_{−∞}^0 J/∫ℝ J = θ 的解 (H 或 α)"""
    def residual(shape: float) -> float:
        left, right, _ = _needle_halves(params, shape, tol)
        return left / (left + right) - theta

    step = math.sqrt(params.K) if params.is_gaussian else 1.0
    bracket = bracket_root(residual, 0.0, step, max_doublings=12)
    return find_root(residual, bracket, tol)


def fixed_point_H(params: ModelParams, theta: float,
                  tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """
    H_θ: ∫_0^∞ J_H/(1−θ) = ∫_{−∞}^0 J_H/θ 的唯一解

    负维数分支在 α = artanh β 上求根, 保证 |β| < 1
    """
    check_theta(theta)
    shape = _solve_shape(params, theta, tol)
    if params.is_gaussian:
        return shape
    return params.exp_rate * math.tanh(shape)


def _shape_from_H(params: ModelParams, H: float) -> float:
    if params.is_gaussian:
        return H
    return NeedleDensityParams(params, H).alpha


def needle_minimax_objective(params: ModelParams, theta: float, H: float,
                             tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """max{∫_0^∞ J_H/(1−θ), ∫_{−∞}^0 J_H/θ}; 在 H_θ 处取到最小值 1/I(θ)"""
    check_theta(theta)
    left, right, log_factor = _needle_halves(params, _shape_from_H(params, H), tol)
    return math.exp(log_factor) * max(right / (1.0 - theta), left / theta)


def needle_lower_bound(params: ModelParams, theta: float,
                       tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """1/∫ℝ J_{H_θ}, 与模型轮廓 I_(K,N,∞)(θ) 相等"""
    H = fixed_point_H(params, theta, tol)
    left, right, log_factor = _needle_halves(params, _shape_from_H(params, H), tol)
    return math.exp(-log_factor) / (left + right)


# ==================== 轮廓曲线 ====================

@dataclass(frozen=True)
class ProfileDiagnostics:
    """单点诊断信息"""
    branch: ProfileBranch
    xi_star: Optional[float] = None
    H_theta: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"branch": self.branch.value, "xi_star": self.xi_star, "H_theta": self.H_theta}


@dataclass(frozen=True)
class ProfileCurve:
    """θ 网格上的轮廓曲线"""
    params: ModelParams
    thetas: Tuple[float, ...]
    values: Tuple[float, ...]
    diagnostics: Tuple[ProfileDiagnostics, ...] = field(default=())

    def __post_init__(self):
        if len(self.thetas) != len(self.values) or len(self.thetas) != len(self.diagnostics):
            raise ParameterError("thetas, values and diagnostics must have equal length")
        if any(b <= a for a, b in zip(self.thetas, self.thetas[1:])):
            raise ParameterError("thetas must be strictly increasing")
        for theta, value in zip(self.thetas, self.values):
            check_theta(theta)
            if not value > 0:
                raise ParameterError(f"profile value must be > 0, got {value} at theta={theta}")

    def symmetry_defect(self) -> float:
        """max |I(θ) − I(1−θ)| 取在网格内互为镜像的点对上"""
        lookup = dict(zip(self.thetas, self.values))
        defect = 0.0
        for theta, value in lookup.items():
            mirror = round(1.0 - theta, 12)
            for other, other_value in lookup.items():
                if abs(other - mirror) < 1e-12:
                    defect = max(defect, abs(value - other_value))
        return defect

    def to_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for theta, value, diag in zip(self.thetas, self.values, self.diagnostics):
            rows.append({"theta": theta, "value": value, **diag.to_dict()})
        return rows


def profile_point(params: ModelParams, theta: float,
                  tol: ToleranceConfig = DEFAULT_TOLERANCE,
                  settings: WindowSettings = DEFAULT_WINDOW
                  ) -> Tuple[float, ProfileDiagnostics]:
    """按参数分派到对应分支, 返回值与诊断"""
    check_theta(theta)
    if params.is_gaussian:
        if params.is_bounded:
            value, xi = profile_gauss_D(params.K, params.D, theta, tol, settings)
            return value, ProfileDiagnostics(ProfileBranch.GAUSS_D, xi_star=xi)
        value = profile_gauss_inf(params.K, theta, tol)
        return value, ProfileDiagnostics(ProfileBranch.GAUSS_INF,
                                         H_theta=fixed_point_H(params, theta, tol))
    if params.is_bounded:
        value, branch, xi = profile_neg_D(params, params.D, theta, tol, settings)
        return value, ProfileDiagnostics(branch, xi_star=xi)
    value = profile_neg_inf(params, theta, tol)
    return value, ProfileDiagnostics(ProfileBranch.NEG_INF,
                                     H_theta=fixed_point_H(params, theta, tol))


def compute_profile_curve(params: ModelParams, thetas: Sequence[float],
                          max_workers: Optional[int] = None,
                          tol: ToleranceConfig = DEFAULT_TOLERANCE,
                          settings: WindowSettings = DEFAULT_WINDOW) -> ProfileCurve:
    """
    在 θ 网格上计算轮廓曲线

    网格点在线程池中并行计算, 输出按 θ 升序组装, 与完成顺序无关
    """
    from backend.grid_dispatcher import run_grid

    ordered = sorted(set(float(t) for t in thetas))
    logger.info(f"[ModelProfiles] Computing profile for {params} on {len(ordered)} thetas")
    results = run_grid(ordered, lambda theta: profile_point(params, theta, tol, settings),
                       max_workers=max_workers)
    return ProfileCurve(params=params,
                        thetas=tuple(ordered),
                        values=tuple(r[0] for r in results),
                        diagnostics=tuple(r[1] for r in results))
