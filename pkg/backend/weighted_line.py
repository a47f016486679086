"""
一维加权空间 (ℝ 或区间, e^{−ψ}dx 归一化测度) 与候选集合

- WeightedLine: 势函数 ψ、可选解析导数、归一化常数
- IntervalUnion: 有限个互不相交区间的并 (规范形式)
- 内置势函数: 高斯、cosh 模型、指数模型、多项式+三角
- 表格势函数: 每行一对 "x ψ(x)", 单调三次插值
"""

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from numpy.polynomial import Polynomial
from scipy.interpolate import PchipInterpolator

from backend.config_manager import get_config
from backend.error_handler import DomainError, ParameterError
from backend.model_params import ModelParams
from backend.numerics import (
    DEFAULT_TOLERANCE,
    Interval,
    ToleranceConfig,
    bracket_root,
    central_difference,
    find_root,
    integrate,
    second_difference,
)

Potential = Callable[[float], float]


# ==================== 区间并 ====================

@dataclass(frozen=True)
class IntervalUnion:
    """
    有限个开区间的并, 按左端点排序

    相接或重叠的区间合并; 空区间丢弃. 补集中的孤立点因此被忽略
    """
    components: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", self._canonical(self.components))

    @staticmethod
    def _canonical(parts: Iterable[Tuple[float, float]]) -> Tuple[Tuple[float, float], ...]:
        cleaned = []
        for lo, hi in parts:
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi):
                raise ParameterError("interval endpoints must not be NaN")
            if hi > lo:
                cleaned.append((lo, hi))
        cleaned.sort()
        merged: List[Tuple[float, float]] = []
        for lo, hi in cleaned:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return tuple(merged)

    # ==================== 构造 ====================

    @classmethod
    def of(cls, *parts: Tuple[float, float]) -> 'IntervalUnion':
        return cls(tuple(parts))

    @classmethod
    def left_halfline(cls, a: float) -> 'IntervalUnion':
        """(−∞, a]"""
        return cls(((-math.inf, a),))

    @classmethod
    def right_halfline(cls, b: float) -> 'IntervalUnion':
        """[b, ∞)"""
        return cls(((b, math.inf),))

    # ==================== 查询 ====================

    @property
    def is_empty(self) -> bool:
        return not self.components

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def clip(self, domain: Interval) -> 'IntervalUnion':
        return IntervalUnion(tuple((max(lo, domain.lo), min(hi, domain.hi))
                                   for lo, hi in self.components))

    def boundary_points(self, domain: Interval) -> List[float]:
        """落在定义域内部的有限端点"""
        points = []
        for lo, hi in self.clip(domain).components:
            for x in (lo, hi):
                if math.isfinite(x) and domain.lo < x < domain.hi:
                    points.append(x)
        return points

    def is_halfline(self, domain: Interval) -> bool:
        """单个分量且与定义域的一端相接"""
        parts = self.clip(domain).components
        if len(parts) != 1:
            return False
        lo, hi = parts[0]
        return (lo <= domain.lo) != (hi >= domain.hi)

    def is_full(self, domain: Interval) -> bool:
        parts = self.clip(domain).components
        return len(parts) == 1 and parts[0][0] <= domain.lo and parts[0][1] >= domain.hi

    def complement(self, domain: Interval) -> 'IntervalUnion':
        parts = []
        cursor = domain.lo
        for lo, hi in self.clip(domain).components:
            parts.append((cursor, lo))
            cursor = hi
        parts.append((cursor, domain.hi))
        return IntervalUnion(tuple(parts))

    def mirrored(self) -> 'IntervalUnion':
        """关于 0 的反射"""
        return IntervalUnion(tuple((-hi, -lo) for lo, hi in self.components))

    def to_list(self) -> List[List[Union[float, str]]]:
        def fmt(x: float) -> Union[float, str]:
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return x
        return [[fmt(lo), fmt(hi)] for lo, hi in self.components]


# ==================== 加权直线 ====================

class WeightedLine:
    """
    加权一维空间 (domain, e^{−ψ}dx/Z)

    ψ 保持调用方给出的原始形式 (刚性检测需要未归一化的 ψ),
    归一化常数 Z 单独存放. 构造后不可变.

    Args:
        psi: 势函数
        domain: 定义域
        dpsi / d2psi: 可选解析导数, 缺省时用中心差分 h = fd_step·(1+|x|)
        mass_tail / fd_step / fd_step_second: 缺省取全局配置
        center / scale: 无穷区间积分替换的中心与长度尺度 (取密度峰附近)
        symmetric: 已知关于 0 对称时可直接声明
        name: 报告中使用的名称
    """

    def __init__(self, psi: Potential, domain: Optional[Interval] = None,
                 dpsi: Optional[Potential] = None, d2psi: Optional[Potential] = None,
                 center: float = 0.0, scale: float = 1.0,
                 symmetric: Optional[bool] = None, name: str = "custom",
                 tol: ToleranceConfig = DEFAULT_TOLERANCE,
                 mass_tail: Optional[float] = None, fd_step: Optional[float] = None,
                 fd_step_second: Optional[float] = None):
        self.psi = psi
        self.domain = domain or Interval.real_line()
        self._dpsi = dpsi
        self._d2psi = d2psi
        self.center = self.domain.clip(center)
        self.scale = scale
        self._symmetric = symmetric
        self.name = name
        self.tol = tol
        app = get_config()
        self.mass_tail = app.mass_tail if mass_tail is None else mass_tail
        self.fd_base = app.fd_step if fd_step is None else fd_step
        self.fd2_base = app.fd_step_second if fd_step_second is None else fd_step_second

        self._psi_ref = psi(self.center)
        if not math.isfinite(self._psi_ref):
            raise ParameterError(f"psi must be finite at the reference point x={self.center}")
        total = integrate(self._scaled_weight, self.domain, tol,
                          center=self.center, scale=self.scale)
        if not total.value > 0:
            raise ParameterError("e^{-psi} has zero mass on the domain")
        self.normalization = total.value * math.exp(-self._psi_ref)
        self._log_z = math.log(total.value)
        logger.debug(f"[Needle1D] WeightedLine {name}: Z={self.normalization:.12g}")

    def _scaled_weight(self, x: float) -> float:
        return math.exp(self._psi_ref - self.psi(x))

    # ==================== 势与密度 ====================

    def dpsi(self, x: float) -> float:
        if self._dpsi is not None:
            return self._dpsi(x)
        return central_difference(self.psi, x, self.fd_base * (1.0 + abs(x)))

    def d2psi(self, x: float) -> float:
        if self._d2psi is not None:
            return self._d2psi(x)
        return second_difference(self.psi, x, self.fd2_base * (1.0 + abs(x)))

    def log_density(self, x: float) -> float:
        return self._psi_ref - self.psi(x) - self._log_z

    def density(self, x: float) -> float:
        """归一化密度 e^{−ψ(x)}/Z; 定义域外为 0"""
        if not (self.domain.lo <= x <= self.domain.hi) or math.isinf(x):
            return 0.0
        return math.exp(self.log_density(x))

    def density_array(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.density(float(x)) for x in xs])

    # ==================== 质量 ====================

    def mass(self, lo: float, hi: float) -> float:
        """m((lo, hi)), 端点截到定义域内"""
        lo, hi = max(lo, self.domain.lo), min(hi, self.domain.hi)
        if hi <= lo:
            return 0.0
        value = integrate(self.density, Interval(lo, hi), self.tol,
                          center=self.center, scale=self.scale).value
        return min(max(value, 0.0), 1.0)

    def cdf(self, x: float) -> float:
        return self.mass(self.domain.lo, x)

    def sf(self, x: float) -> float:
        return self.mass(x, self.domain.hi)

    def _solve_monotone(self, residual: Callable[[float], float]) -> float:
        if self.domain.is_finite:
            return find_root(residual, Interval(self.domain.lo, self.domain.hi), self.tol)
        limits = Interval(self.domain.lo, self.domain.hi)
        bracket = bracket_root(residual, self.center, self.scale, limits=limits)
        return find_root(residual, bracket, self.tol)

    def quantile(self, theta: float) -> float:
        """a: m((−∞, a]) = θ (上半部分用生存函数)"""
        if not 0.0 < theta < 1.0:
            raise DomainError(f"theta must lie in (0,1), got {theta}")
        if theta <= 0.5:
            return self._solve_monotone(lambda a: self.cdf(a) - theta)
        return self._solve_monotone(lambda a: (1.0 - theta) - self.sf(a))

    def upper_quantile(self, theta: float) -> float:
        """b: m([b, ∞)) = θ"""
        return self.quantile(1.0 - theta)

    @cached_property
    def support(self) -> Interval:
        """尾部质量低于 mass_tail 处截断后的有效支撑"""
        lo = self.domain.lo if not self.domain.lo_infinite else self.quantile(self.mass_tail)
        hi = self.domain.hi if not self.domain.hi_infinite else self.upper_quantile(self.mass_tail)
        return Interval(lo, hi)

    # ==================== 结构性质 ====================

    def is_symmetric(self, samples: int = 41, atol: float = 1e-10) -> bool:
        """ψ(x) = ψ(−x) 在有效支撑的网格上成立"""
        if self._symmetric is not None:
            return self._symmetric
        if self.domain.lo != -self.domain.hi:
            return False
        half = min(abs(self.support.lo), abs(self.support.hi))
        xs = np.linspace(0.0, half, samples)
        return all(abs(self.psi(x) - self.psi(-x)) <= atol * (1.0 + abs(self.psi(x))) for x in xs)

    def sample_points(self, count: int = 201) -> np.ndarray:
        support = self.support
        return np.linspace(support.lo, support.hi, count)

    def min_second_derivative(self, count: int = 201) -> float:
        return float(min(self.d2psi(float(x)) for x in self.sample_points(count)))

    def is_log_concave(self, count: int = 201, atol: float = 1e-8) -> bool:
        """ψ'' ≥ 0 (采样检验)"""
        return self.min_second_derivative(count) >= -atol

    def is_strictly_log_concave(self, count: int = 201) -> bool:
        return self.min_second_derivative(count) > 0.0

    # ==================== 变换 ====================

    def reflected(self) -> 'WeightedLine':
        """x ↦ −x 的像"""
        dpsi = (lambda x: -self._dpsi(-x)) if self._dpsi is not None else None
        d2psi = (lambda x: self._d2psi(-x)) if self._d2psi is not None else None
        return WeightedLine(lambda x: self.psi(-x), Interval(-self.domain.hi, -self.domain.lo),
                            dpsi, d2psi, center=-self.center, scale=self.scale,
                            symmetric=self._symmetric, name=f"{self.name}~reflected",
                            tol=self.tol, mass_tail=self.mass_tail, fd_step=self.fd_base,
                            fd_step_second=self.fd2_base)

    def perturbed(self, term: Potential, dterm: Optional[Potential] = None,
                  d2term: Optional[Potential] = None, name: Optional[str] = None) -> 'WeightedLine':
        """ψ + term; 只有两边都给出解析导数时才保留解析导数"""
        dpsi = None
        if self._dpsi is not None and dterm is not None:
            dpsi = lambda x: self._dpsi(x) + dterm(x)
        d2psi = None
        if self._d2psi is not None and d2term is not None:
            d2psi = lambda x: self._d2psi(x) + d2term(x)
        return WeightedLine(lambda x: self.psi(x) + term(x), self.domain, dpsi, d2psi,
                            center=self.center, scale=self.scale,
                            name=name or f"{self.name}+perturbation",
                            tol=self.tol, mass_tail=self.mass_tail, fd_step=self.fd_base,
                            fd_step_second=self.fd2_base)

    def __repr__(self) -> str:
        return f"WeightedLine({self.name}, domain=({self.domain.lo}, {self.domain.hi}))"


# ==================== 内置势函数 ====================

def gaussian_line(K: float, shift: float = 0.0,
                  tol: ToleranceConfig = DEFAULT_TOLERANCE) -> WeightedLine:
    """ψ = K(x − shift)²/2, 满足 K-凸性且取等号"""
    if not K > 0:
        raise ParameterError(f"K must be > 0, got {K}")
    return WeightedLine(lambda x: 0.5 * K * (x - shift) ** 2,
                        dpsi=lambda x: K * (x - shift), d2psi=lambda x: K,
                        center=shift, scale=1.0 / math.sqrt(K),
                        symmetric=(shift == 0.0), name=f"gaussian(K={K})", tol=tol)


def cosh_model_line(params: ModelParams, gamma: float = 0.0, k: float = 1.0,
                    tol: ToleranceConfig = DEFAULT_TOLERANCE) -> WeightedLine:
    """
    e^{−ψ} = (k·cosh(γ + √σx))^{N−1}

    ψ = −(N−1)(log k + log cosh(γ + √σx)), (K, N−1)-凸性取等号
    """
    params.require_negative()
    if not k > 0:
        raise ParameterError(f"k must be > 0, got {k}")
    rs, p = params.sqrt_sigma, params.N - 1.0
    log_k = math.log(k)

    def psi(x: float) -> float:
        y = gamma + rs * x
        ay = abs(y)
        return -p * (log_k + ay + math.log1p(math.exp(-2.0 * ay)) - math.log(2.0))

    return WeightedLine(psi,
                        dpsi=lambda x: -p * rs * math.tanh(gamma + rs * x),
                        d2psi=lambda x: -p * rs * rs / math.cosh(gamma + rs * x) ** 2,
                        center=-gamma / rs, scale=1.0 / rs,
                        symmetric=(gamma == 0.0),
                        name=f"cosh(K={params.K},N={params.N},gamma={gamma},k={k})", tol=tol)


def exp_model_line(rate: float, D: float,
                   tol: ToleranceConfig = DEFAULT_TOLERANCE) -> WeightedLine:
    """[0, D] 上的 e^{rate·x}"""
    if not (math.isfinite(D) and D > 0):
        raise ParameterError(f"D must be finite and positive, got {D}")
    return WeightedLine(lambda x: -rate * x, Interval(0.0, D),
                        dpsi=lambda x: -rate, d2psi=lambda x: 0.0,
                        center=0.5 * D, scale=D, symmetric=False,
                        name=f"exp(rate={rate},D={D})", tol=tol)


def polynomial_trig_line(poly: Sequence[float],
                         trig: Sequence[Tuple[float, float, float]] = (),
                         domain: Optional[Interval] = None, center: float = 0.0,
                         scale: float = 1.0,
                         tol: ToleranceConfig = DEFAULT_TOLERANCE) -> WeightedLine:
    """
    ψ(x) = Σ poly[i]·x^i + Σ A·sin(ωx + φ)

    Args:
        poly: 多项式系数 (升幂)
        trig: (A, ω, φ) 三元组
    """
    p = Polynomial(poly)
    dp, d2p = p.deriv(1), p.deriv(2)
    terms = [tuple(map(float, t)) for t in trig]

    def psi(x: float) -> float:
        return float(p(x)) + sum(A * math.sin(w * x + phi) for A, w, phi in terms)

    def dpsi(x: float) -> float:
        return float(dp(x)) + sum(A * w * math.cos(w * x + phi) for A, w, phi in terms)

    def d2psi(x: float) -> float:
        return float(d2p(x)) - sum(A * w * w * math.sin(w * x + phi) for A, w, phi in terms)

    return WeightedLine(psi, domain, dpsi, d2psi, center=center, scale=scale,
                        name=f"poly{list(poly)}+trig{terms}", tol=tol)


def load_tabulated_potential(path: Union[str, Path],
                             tol: ToleranceConfig = DEFAULT_TOLERANCE) -> WeightedLine:
    """
    读取表格势函数

    文本格式: 每行 "x ψ(x)" (空白或逗号分隔), '#' 开头为注释; x 严格递增.
    定义域为表格的 [x_0, x_n], 采用单调三次 (PCHIP) 插值.
    """
    path = Path(path)
    try:
        delimiter = "," if path.suffix.lower() == ".csv" else None
        table = np.loadtxt(path, comments="#", delimiter=delimiter, ndmin=2)
    except (OSError, ValueError) as e:
        raise ParameterError(f"cannot read potential table {path}: {e}",
                             recovery_hint="每行一对数值 'x psi(x)'")
    if table.shape[1] != 2 or table.shape[0] < 4:
        raise ParameterError(f"potential table {path} needs >= 4 rows of two columns, got {table.shape}")
    xs, ys = table[:, 0], table[:, 1]
    if np.any(np.diff(xs) <= 0):
        raise ParameterError(f"x column of {path} must be strictly increasing")

    interp = PchipInterpolator(xs, ys, extrapolate=False)
    d1, d2 = interp.derivative(1), interp.derivative(2)
    domain = Interval(float(xs[0]), float(xs[-1]))
    center = float(xs[int(np.argmin(ys))])
    logger.info(f"[Needle1D] Loaded tabulated potential {path.name} ({len(xs)} nodes)")
    return WeightedLine(lambda x: float(interp(x)), domain,
                        dpsi=lambda x: float(d1(x)), d2psi=lambda x: float(d2(x)),
                        center=center, scale=domain.width, name=path.stem, tol=tol)
