"""
数值核心模块 - 所有模块共享的确定性标量数值方法

- 有限/无穷区间上的自适应积分 (s = c + scale·tan(u) 变量替换后交给 QUADPACK)
- 有括号的混合求根 (Brent: 二分保护的插值步)
- 64 点确定性预扫描 + 有界 Brent/黄金分割一维极小化
- 中心差分导数校验
"""

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import integrate as sp_integrate
from scipy import optimize

from backend.error_handler import (
    IntegrationError,
    MinimizationError,
    ParameterError,
    RootFindingError,
)

ScalarFunction = Callable[[float], float]

_EPS = float(np.finfo(float).eps)
HALF_PI = 0.5 * math.pi


# ==================== 基础数据类型 ====================

@dataclass(frozen=True)
class Interval:
    """
    扩展实数区间 (lo, hi)

    无穷端点用 ±math.inf 标记, 从不使用大的有限数代替
    """
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ParameterError(f"Interval endpoints must not be NaN: ({self.lo}, {self.hi})")
        if not self.lo < self.hi:
            raise ParameterError(f"Interval requires lo < hi, got ({self.lo}, {self.hi})")

    @classmethod
    def real_line(cls) -> 'Interval':
        return cls(-math.inf, math.inf)

    @property
    def lo_infinite(self) -> bool:
        return math.isinf(self.lo)

    @property
    def hi_infinite(self) -> bool:
        return math.isinf(self.hi)

    @property
    def is_finite(self) -> bool:
        return not (self.lo_infinite or self.hi_infinite)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def clip(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def __iter__(self):
        yield self.lo
        yield self.hi


@dataclass(frozen=True)
class NumericResult:
    """积分结果: 数值、误差估计、函数求值次数"""
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ParameterError("error_estimate must be >= 0")
        if self.evaluations <= 0:
            raise ParameterError("evaluations must be > 0")

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class ToleranceConfig:
    """数值容差配置"""
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_evals: int = 1_000_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_evals > 0):
            raise ParameterError(
                "ToleranceConfig fields must be strictly positive",
                details=f"abs_tol={self.abs_tol}, rel_tol={self.rel_tol}, max_evals={self.max_evals}",
            )

    @classmethod
    def from_app_config(cls, config=None) -> 'ToleranceConfig':
        """从 AppConfig 构造 (默认取全局配置)"""
        if config is None:
            from backend.config_manager import get_config
            config = get_config()
        return cls(abs_tol=config.abs_tol, rel_tol=config.rel_tol, max_evals=config.max_evals)


DEFAULT_TOLERANCE = ToleranceConfig()

# QUADPACK 的 21 点 Gauss-Kronrod 规则, 每次二分两段
_EVALS_PER_SUBDIVISION = 42


# ==================== 积分 ====================

def _checked(f: ScalarFunction) -> ScalarFunction:
    """NaN 检测包装"""
    def wrapped(s: float) -> float:
        value = f(s)
        if value != value:
            raise IntegrationError("integrand returned NaN", sample_point=float(s),
                                   details=f"f({s!r}) = nan")
        return value
    return wrapped


def _tan_substitution(f: ScalarFunction, domain: Interval, center: float,
                      scale: float) -> Tuple[ScalarFunction, float, float]:
    """把 (半) 无穷区间映射到有限 u 区间: s = anchor + scale·tan(u)"""
    if domain.lo_infinite and domain.hi_infinite:
        anchor, u_lo, u_hi = center, -HALF_PI, HALF_PI
    elif domain.hi_infinite:
        anchor, u_lo, u_hi = domain.lo, 0.0, HALF_PI
    else:
        anchor, u_lo, u_hi = domain.hi, -HALF_PI, 0.0

    def g(u: float) -> float:
        c = math.cos(u)
        s = anchor + scale * math.tan(u)
        value = f(s)
        if value == 0.0:
            return 0.0
        return value * scale / (c * c)

    return g, u_lo, u_hi


def integrate(f: ScalarFunction, domain: Interval,
              tol: ToleranceConfig = DEFAULT_TOLERANCE,
              center: float = 0.0, scale: float = 1.0,
              points: Optional[Iterable[float]] = None) -> NumericResult:
    """
    自适应积分

    Args:
        f: 被积函数
        domain: 积分区间, 端点可为 ±inf
        tol: 容差
        center: 全直线情形 tan 替换的中心
        scale: tan 替换的长度尺度
        points: 有限区间上的已知困难点

    Returns:
        NumericResult

    Raises:
        IntegrationError: 未收敛 (附带部分估计) 或被积函数返回 NaN (附带采样点)
    """
    if not scale > 0:
        raise ParameterError(f"scale must be > 0, got {scale}")

    integrand = _checked(f)
    limit = max(50, tol.max_evals // _EVALS_PER_SUBDIVISION)
    if domain.is_finite:
        g, a, b = integrand, domain.lo, domain.hi
        breakpoints = sorted(p for p in (points or ()) if a < p < b) or None
    else:
        g, a, b = _tan_substitution(integrand, domain, center, scale)
        breakpoints = None

    out = sp_integrate.quad(g, a, b, epsabs=tol.abs_tol, epsrel=tol.rel_tol,
                            limit=limit, points=breakpoints, full_output=1)
    value, abserr, info = out[0], out[1], out[2]
    evaluations = int(info.get("neval", 1)) or 1

    if not math.isfinite(value):
        raise IntegrationError("integral is not finite", partial_estimate=value,
                               details=f"domain=({domain.lo}, {domain.hi})")

    target = max(tol.abs_tol, tol.rel_tol * abs(value))
    if len(out) > 3:
        # QUADPACK 报告了警告; 只有误差估计不超过容差时才接受
        if abserr > target or evaluations > tol.max_evals:
            raise IntegrationError(
                "quadrature did not converge",
                partial_estimate=value,
                details=f"domain=({domain.lo}, {domain.hi}), error≈{abserr:.3e}, evals={evaluations}: {out[3]}",
                recovery_hint="放宽 rel_tol 或增大 max_evals",
            )
        logger.debug(f"[Numerics] quad warning accepted (err={abserr:.2e}): {out[3]}")

    return NumericResult(value=float(value), error_estimate=float(abs(abserr)),
                         evaluations=evaluations)


# ==================== 求根 ====================

class _BracketTracker:
    """记录 Brent 迭代中最紧的变号括号"""

    def __init__(self, f: ScalarFunction, lo: float, f_lo: float, hi: float, f_hi: float):
        self.f = f
        self.lo, self.f_lo = lo, f_lo
        self.hi, self.f_hi = hi, f_hi

    def __call__(self, x: float) -> float:
        fx = self.f(x)
        if fx != fx:
            raise RootFindingError("function returned NaN inside bracket",
                                   last_bracket=(self.lo, self.hi))
        if fx == 0.0 or (fx < 0) == (self.f_lo < 0):
            if self.lo <= x <= self.hi:
                self.lo, self.f_lo = x, fx
        else:
            if self.lo <= x <= self.hi:
                self.hi, self.f_hi = x, fx
        return fx


def find_root(f: ScalarFunction, bracket: Interval,
              tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """
    有括号求根

    Args:
        f: 连续函数, f(lo)·f(hi) <= 0
        bracket: 有限括号区间
        tol: abs_tol 作为 x 方向的终止宽度

    Returns:
        float: 根

    Raises:
        RootFindingError: 无变号或未收敛
    """
    if not bracket.is_finite:
        raise RootFindingError("root bracket must be finite",
                               last_bracket=(bracket.lo, bracket.hi),
                               recovery_hint="先用 bracket_root 扩张出有限括号")
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    if f_lo != f_lo or f_hi != f_hi:
        raise RootFindingError("function returned NaN at bracket endpoint", last_bracket=(lo, hi))
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo < 0) == (f_hi < 0):
        raise RootFindingError("no sign change on bracket", last_bracket=(lo, hi),
                               details=f"f({lo})={f_lo:.3e}, f({hi})={f_hi:.3e}")

    tracker = _BracketTracker(f, lo, f_lo, hi, f_hi)
    maxiter = int(min(tol.max_evals, 1000))
    root, status = optimize.brentq(tracker, lo, hi, xtol=tol.abs_tol, rtol=4.0 * _EPS,
                                   maxiter=maxiter, full_output=True, disp=False)
    if not status.converged:
        raise RootFindingError(f"root finding did not converge: {status.flag}",
                               last_bracket=(tracker.lo, tracker.hi))
    return float(root)


def bracket_root(f: ScalarFunction, x0: float = 0.0, step: float = 1.0,
                 max_doublings: int = 64,
                 limits: Optional[Interval] = None) -> Interval:
    """
    从 x0 出发双向倍增步长寻找变号括号

    Args:
        f: 连续函数
        x0: 起点
        step: 初始步长
        max_doublings: 最大倍增次数
        limits: 括号不得越过的开区间

    Returns:
        Interval: 含变号的有限括号
    """
    f0 = f(x0)
    if f0 == 0.0:
        return Interval(x0 - step * 1e-3, x0 + step * 1e-3)
    lo_limit = limits.lo if limits is not None else -math.inf
    hi_limit = limits.hi if limits is not None else math.inf

    left, right = x0, x0
    for k in range(max_doublings):
        width = step * (2.0 ** k)
        # 靠近开区间端点时改为向端点折半逼近
        new_right = x0 + width
        if new_right >= hi_limit:
            new_right = 0.5 * (right + hi_limit)
        new_left = x0 - width
        if new_left <= lo_limit:
            new_left = 0.5 * (left + lo_limit)

        f_right = f(new_right)
        if (f_right < 0) != (f0 < 0) or f_right == 0.0:
            return Interval(right, new_right)
        f_left = f(new_left)
        if (f_left < 0) != (f0 < 0) or f_left == 0.0:
            return Interval(new_left, left)
        left, right = new_left, new_right

    raise RootFindingError("could not bracket a sign change",
                           last_bracket=(left, right),
                           details=f"x0={x0}, step={step}, doublings={max_doublings}")


# ==================== 极小化 ====================

def minimize_scalar(f: ScalarFunction, domain: Interval,
                    tol: ToleranceConfig = DEFAULT_TOLERANCE,
                    window: Optional[Interval] = None,
                    tail_values: Optional[Mapping[float, float]] = None,
                    prescan_points: int = 64,
                    xatol: float = 1e-9) -> Tuple[float, float]:
    """
    一维极小化: 确定性预扫描后在最优格点邻域内做有界 Brent 精化

    Args:
        f: 连续函数
        domain: 定义域
        tol: 容差 (abs_tol 用于比较)
        window: 无界定义域时的有限搜索窗口
        tail_values: 无界定义域时 {±inf: 尾部极限值}
        prescan_points: 预扫描点数
        xatol: 精化阶段的 x 容差

    Returns:
        (x*, f(x*)); 尾部极限更小时 x* 为 ±inf
    """
    if domain.is_finite:
        search = domain if window is None else window
    else:
        if window is None or tail_values is None:
            raise MinimizationError(
                "unbounded domain requires a finite search window and tail-limit values",
                details=f"domain=({domain.lo}, {domain.hi})",
            )
        search = window
    if not search.is_finite or search.lo < domain.lo or search.hi > domain.hi:
        raise MinimizationError("search window must be finite and inside the domain",
                                details=f"window=({search.lo}, {search.hi})")

    xs = np.linspace(search.lo, search.hi, prescan_points)
    fs = np.array([f(float(x)) for x in xs])
    if np.any(np.isnan(fs)):
        bad = float(xs[int(np.argmax(np.isnan(fs)))])
        raise MinimizationError("objective returned NaN during pre-scan", details=f"x={bad}")

    i = int(np.argmin(fs))
    best_x, best_f = float(xs[i]), float(fs[i])

    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, len(xs) - 1)])
    res = optimize.minimize_scalar(f, bounds=(a, b), method="bounded",
                                   options={"xatol": xatol, "maxiter": 500})
    if res.success and math.isfinite(res.fun) and res.fun < best_f:
        best_x, best_f = float(res.x), float(res.fun)

    for x_tail, value in sorted((tail_values or {}).items()):
        if value < best_f - tol.abs_tol:
            best_x, best_f = float(x_tail), float(value)

    return best_x, best_f


# ==================== 有限差分 ====================

def _configured_step_base(name: str) -> float:
    from backend.config_manager import get_config
    return float(getattr(get_config(), name))


def fd_step(x: float, base: Optional[float] = None) -> float:
    """相对步长 h = base·(1+|x|); base 缺省取配置项 fd_step"""
    if base is None:
        base = _configured_step_base("fd_step")
    return base * (1.0 + abs(x))


def central_difference(f: ScalarFunction, x: float, h: Optional[float] = None) -> float:
    """一阶中心差分"""
    h = fd_step(x) if h is None else h
    return (f(x + h) - f(x - h)) / (2.0 * h)


def second_difference(f: ScalarFunction, x: float, h: Optional[float] = None) -> float:
    """二阶中心差分 (默认步长 fd_step_second·(1+|x|))"""
    h = fd_step(x, _configured_step_base("fd_step_second")) if h is None else h
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def derivative_check(f: ScalarFunction, g: ScalarFunction, points: Iterable[float],
                     tol: float, h: Optional[float] = None) -> bool:
    """
    中心差分校验: 每个点上 |Df(x) - g(x)| <= tol·(1+|g(x)|) 时返回 True
    """
    for x in points:
        expected = g(x)
        numeric = central_difference(f, x, h)
        if not abs(numeric - expected) <= tol * (1.0 + abs(expected)):
            logger.debug(f"[Numerics] derivative mismatch at x={x}: fd={numeric:.12g}, claimed={expected:.12g}")
            return False
    return True
