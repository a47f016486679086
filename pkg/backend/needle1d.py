"""
一维针线分析

- 测度与外 Minkowski 边界
- 对数凹情形下的半直线约化 (只需比较 (−∞,a] 与 [b,∞))
- 对称严格对数凹测度上的平移算法: 保持测度、边界单调下降, 直到得到半直线
- 穷举网格搜索 (作为半直线结论的对照)
- (K, N−1)-凸性检验与刚性检测 (恢复模型密度 (k·cosh(γ+√σx))^{N−1})
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from backend.error_handler import DomainError, HypothesisError, StepLimitError
from backend.model_params import ModelParams
from backend.model_profiles import log_cosh
from backend.weighted_line import IntervalUnion, WeightedLine


# ==================== 报告类型 ====================

@dataclass(frozen=True)
class MinimizerReport:
    """候选集合及其测度、边界与同测度下的半直线轮廓值"""
    set: IntervalUnion
    mass: float
    boundary: float
    profile_value: float
    is_halfline: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "set": self.set.to_list(),
            "mass": self.mass,
            "boundary": self.boundary,
            "profile_value": self.profile_value,
            "is_halfline": self.is_halfline,
        }


@dataclass(frozen=True)
class ConvexityReport:
    """ψ'' − (ψ')²/(N−1) − K (N = ∞ 时为 ψ'' − K) 在采样点上的最小值"""
    passed: bool
    margin: float
    argmin: float
    K: float
    N: float

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "margin": self.margin, "argmin": self.argmin,
                "K": self.K, "N": "inf" if self.N == math.inf else self.N}


@dataclass(frozen=True)
class RigidityReport:
    """刚性检测结果"""
    matches_model: bool
    residual: float
    k: Optional[float] = None
    gamma: Optional[float] = None
    gaussian_shift: Optional[float] = None
    diagnostic: str = ""

    def fitted(self) -> Dict[str, float]:
        if self.gaussian_shift is not None:
            return {"gaussian_shift": self.gaussian_shift}
        if self.k is None:
            return {}
        return {"k": self.k, "gamma": self.gamma}

    def to_dict(self) -> Dict[str, Any]:
        return {"matches_model": self.matches_model, "fitted": self.fitted(),
                "residual": self.residual, "diagnostic": self.diagnostic}


@dataclass
class BruteForceReport:
    """穷举搜索的最优集合及网格分辨率项"""
    best: MinimizerReport
    resolution: float
    grid_size: int
    candidates: int = field(default=0)

    def to_dict(self) -> Dict[str, Any]:
        return {**self.best.to_dict(), "resolution": self.resolution,
                "grid_size": self.grid_size, "candidates": self.candidates}


# ==================== 测度与边界 ====================

def measure(space: WeightedLine, set: IntervalUnion) -> float:
    """各分量归一化质量之和"""
    return min(sum(space.mass(lo, hi) for lo, hi in set.clip(space.domain)), 1.0)


def boundary_measure(space: WeightedLine, set: IntervalUnion) -> float:
    """m⁺(A) = Σ_{x∈∂A} e^{−ψ(x)}/Z, 无穷端点与定义域端点不计"""
    return sum(space.density(x) for x in set.boundary_points(space.domain))


# ==================== 半直线约化 ====================

def _halfline_candidates(space: WeightedLine, theta: float) -> Tuple[MinimizerReport, MinimizerReport]:
    a = space.quantile(theta)
    b = space.upper_quantile(theta)
    left = IntervalUnion(((space.domain.lo, a),))
    right = IntervalUnion(((b, space.domain.hi),))
    left_value = boundary_measure(space, left)
    right_value = boundary_measure(space, right)
    best = min(left_value, right_value)
    return (MinimizerReport(left, theta, left_value, best, True),
            MinimizerReport(right, theta, right_value, best, True))


def halfline_profile(space: WeightedLine, theta: float,
                     check_hypothesis: bool = True) -> MinimizerReport:
    """
    对数凹测度的轮廓: min{m⁺((−∞,a]), m⁺([b,∞))}, m((−∞,a]) = m([b,∞)) = θ

    Args:
        check_hypothesis: 为 True 时拒绝非对数凹输入

    Raises:
        HypothesisError: ψ 在采样点上非凸
    """
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0,1), got {theta}")
    if check_hypothesis and not space.is_log_concave():
        raise HypothesisError(
            f"{space.name} is not log-concave; the half-line reduction does not apply",
            recovery_hint="使用 brute_force_minimizer 或 check_hypothesis=False",
        )
    left, right = _halfline_candidates(space, theta)
    # 相等时取左半直线
    return left if left.boundary <= right.boundary else right


# ==================== 平移算法 ====================

def _require_shift_hypothesis(space: WeightedLine) -> None:
    if not space.is_symmetric():
        raise HypothesisError(f"shifting requires a symmetric measure, {space.name} is not")
    if not space.is_strictly_log_concave():
        raise HypothesisError(f"shifting requires a strictly log-concave measure, {space.name} is not")


def _right_shift_unchecked(space: WeightedLine, a: float, b: float, eps: float) -> Tuple[float, float]:
    target = space.mass(a, b)
    a_new = a + eps
    room = space.sf(a_new)
    if room <= target:
        # 右端逃逸到 +∞: 极限为 [b̃, ∞), m = target
        return space.upper_quantile(target), space.domain.hi
    return a_new, space.upper_quantile(room - target)


def _left_shift_unchecked(space: WeightedLine, a: float, b: float, eps: float) -> Tuple[float, float]:
    target = space.mass(a, b)
    b_new = b - eps
    room = space.cdf(b_new)
    if room <= target:
        return space.domain.lo, space.quantile(target)
    return space.quantile(room - target), b_new


def right_shift(space: WeightedLine, interval: Tuple[float, float], eps: float) -> IntervalUnion:
    """
    (a, b) ↦ (a + ε, b + g(ε)), 测度不变

    需要 a + b ≥ 0; 右端越出定义域时返回与 +∞ 尾部合并后的半直线
    """
    a, b = interval
    if not eps > 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainError(f"shifts act on bounded intervals, got ({a}, {b})")
    if a + b < 0:
        raise DomainError(f"right shift requires a + b >= 0, got a + b = {a + b}")
    _require_shift_hypothesis(space)
    return IntervalUnion((_right_shift_unchecked(space, a, b, eps),))


def left_shift(space: WeightedLine, interval: Tuple[float, float], eps: float) -> IntervalUnion:
    """(a, b) ↦ (a − g(ε), b − ε), right_shift 的镜像; 需要 a + b ≤ 0"""
    a, b = interval
    if not eps > 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainError(f"shifts act on bounded intervals, got ({a}, {b})")
    if a + b > 0:
        raise DomainError(f"left shift requires a + b <= 0, got a + b = {a + b}")
    _require_shift_hypothesis(space)
    return IntervalUnion((_left_shift_unchecked(space, a, b, eps),))


def _shift_step(space: WeightedLine, parts: List[Tuple[float, float]], eps: float) -> List[Tuple[float, float]]:
    """
    平移一个有界分量一步; 碰到相邻分量时精确地停在合并点

    选取中点离 0 最远的有界分量, a + b ≥ 0 时右移, 否则左移
    """
    domain = space.domain
    bounded = [i for i, (lo, hi) in enumerate(parts) if lo > domain.lo and hi < domain.hi]
    index = max(bounded, key=lambda i: (abs(parts[i][0] + parts[i][1]), -i))
    a, b = parts[index]
    parts = list(parts)

    if a + b >= 0:
        new_a, new_b = _right_shift_unchecked(space, a, b, eps)
        if index + 1 < len(parts) and new_b >= parts[index + 1][0]:
            c, d = parts[index + 1]
            target = space.mass(a, b)
            merged_lo = space.quantile(space.cdf(c) - target)
            parts[index:index + 2] = [(merged_lo, d)]
        else:
            parts[index] = (new_a, new_b)
    else:
        new_a, new_b = _left_shift_unchecked(space, a, b, eps)
        if index > 0 and new_a <= parts[index - 1][1]:
            c, d = parts[index - 1]
            target = space.mass(a, b)
            merged_hi = space.upper_quantile(space.sf(d) - target)
            parts[index - 1:index + 1] = [(c, merged_hi)]
        else:
            parts[index] = (new_a, new_b)
    return parts


def _report(space: WeightedLine, set: IntervalUnion, profile_value: float) -> MinimizerReport:
    return MinimizerReport(set=set, mass=measure(space, set), boundary=boundary_measure(space, set),
                           profile_value=profile_value, is_halfline=set.is_halfline(space.domain))


def reduce_to_halfline(space: WeightedLine, set: IntervalUnion,
                       step: Optional[float] = None, max_steps: int = 2000,
                       step_fraction: float = 1e-2) -> List[MinimizerReport]:
    """
    反复平移/合并直到得到半直线

    (−∞,a] ∪ [b,∞) 形式的集合改为约化其补集 (a,b), 再取补.

    Args:
        step: 平移步长, 缺省为 step_fraction × 空间长度尺度

    Returns:
        轨迹, 第一项为输入集合, 最后一项为半直线

    Raises:
        StepLimitError: 超过 max_steps (携带已有轨迹)
    """
    _require_shift_hypothesis(space)
    domain = space.domain
    current = set.clip(domain)
    if current.is_empty or current.is_full(domain):
        raise DomainError("reduction needs a set of mass strictly between 0 and 1")

    eps = step if step is not None else step_fraction * space.scale
    theta = measure(space, current)
    profile_value = halfline_profile(space, theta).profile_value
    trajectory = [_report(space, current, profile_value)]

    parts = list(current.components)
    unbounded_both = (len(parts) == 2 and parts[0][0] <= domain.lo and parts[1][1] >= domain.hi)
    if unbounded_both:
        logger.debug("[Needle1D] Two unbounded components, reducing the complement")
        inner = current.complement(domain)
        inner_trajectory = reduce_to_halfline(space, inner, eps, max_steps)
        for report in inner_trajectory[1:]:
            trajectory.append(_report(space, report.set.complement(domain), profile_value))
        return trajectory

    steps = 0
    while not current.is_halfline(domain):
        if steps >= max_steps:
            raise StepLimitError(f"shifting did not reach a half-line within {max_steps} steps",
                                 trajectory=trajectory)
        parts = _shift_step(space, list(current.components), eps)
        current = IntervalUnion(tuple(parts)).clip(domain)
        steps += 1

        parts = list(current.components)
        if len(parts) == 2 and parts[0][0] <= domain.lo and parts[1][1] >= domain.hi:
            trajectory.append(_report(space, current, profile_value))
            inner_trajectory = reduce_to_halfline(space, current.complement(domain), eps,
                                                  max_steps - steps)
            for report in inner_trajectory[1:]:
                trajectory.append(_report(space, report.set.complement(domain), profile_value))
            return trajectory
        trajectory.append(_report(space, current, profile_value))

    logger.debug(f"[Needle1D] Reduced to half-line in {steps} steps")
    return trajectory


# ==================== 穷举对照 ====================

def brute_force_minimizer(space: WeightedLine, theta: float, max_components: int = 2,
                          grid_size: int = 400) -> BruteForceReport:
    """
    端点取在网格上的区间并的穷举搜索

    最后一个端点由累积质量的 searchsorted 给出, 质量误差不超过一个网格单元.
    网格两端节点代表定义域端点 (不计入边界).
    """
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0,1), got {theta}")
    if not 1 <= max_components <= 2:
        raise DomainError(f"max_components must be 1 or 2, got {max_components}")
    if not 16 <= grid_size <= 400:
        raise DomainError(f"grid_size must lie in [16, 400], got {grid_size}")

    support = space.support
    xs = np.linspace(support.lo, support.hi, grid_size)
    cells = np.array([space.mass(float(lo), float(hi)) for lo, hi in zip(xs[:-1], xs[1:])])
    F = np.concatenate(([0.0], np.cumsum(cells)))
    F[-1] = 1.0
    dens = space.density_array(xs)
    weight = dens.copy()
    weight[0] = 0.0
    weight[-1] = 0.0
    mass_tol = float(cells.max())
    n = grid_size

    def nearest(target: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(F, target), 1, n - 1)
        lower = idx - 1
        pick_lower = np.abs(F[lower] - target) <= np.abs(F[idx] - target)
        return np.where(pick_lower, lower, idx)

    best_value, best_parts, candidates = math.inf, None, 0

    # 单个分量 (x_i, x_j)
    i = np.arange(n)
    j = nearest(F + theta)
    ok = (j > i) & (np.abs(F[j] - F - theta) <= mass_tol)
    if np.any(ok):
        values = np.where(ok, weight + weight[j], np.inf)
        k = int(np.argmin(values))
        candidates += int(ok.sum())
        best_value, best_parts = float(values[k]), [(k, int(j[k]))]

    # 两个分量 (x_i, x_j) ∪ (x_k, x_l)
    if max_components == 2:
        for i0 in range(n - 3):
            js = np.arange(i0 + 1, n - 2)
            rest = theta - (F[js] - F[i0])
            keep = rest > 0
            if not np.any(keep):
                continue
            js, rest = js[keep], rest[keep]
            ks = np.arange(n)
            K_grid = ks[None, :]
            J_grid = js[:, None]
            target = F[K_grid] + rest[:, None]
            L_grid = nearest(target)
            ok = (K_grid > J_grid) & (L_grid > K_grid) & (np.abs(F[L_grid] - target) <= mass_tol)
            if not np.any(ok):
                continue
            values = np.where(ok, weight[i0] + weight[J_grid] + weight[K_grid] + weight[L_grid], np.inf)
            flat = int(np.argmin(values))
            r, c = divmod(flat, values.shape[1])
            candidates += int(ok.sum())
            if values[r, c] < best_value:
                best_value = float(values[r, c])
                best_parts = [(i0, int(js[r])), (c, int(L_grid[r, c]))]

    if best_parts is None:
        raise DomainError(f"no grid set of mass {theta} found; refine the grid")

    def endpoint(index: int) -> float:
        if index == 0:
            return space.domain.lo
        if index == n - 1:
            return space.domain.hi
        return float(xs[index])

    found = IntervalUnion(tuple((endpoint(p), endpoint(q)) for p, q in best_parts))
    left, right = _halfline_candidates(space, theta)
    report = MinimizerReport(set=found, mass=float(sum(F[q] - F[p] for p, q in best_parts)),
                             boundary=boundary_measure(space, found),
                             profile_value=left.profile_value,
                             is_halfline=found.is_halfline(space.domain))
    resolution = 4.0 * float(np.max(np.abs(np.diff(dens))))
    logger.debug(f"[Needle1D] Brute force on {space.name}: boundary={report.boundary:.6g}, "
                 f"halfline={report.profile_value:.6g}, resolution={resolution:.2e}")
    return BruteForceReport(best=report, resolution=resolution, grid_size=n, candidates=candidates)


# ==================== 凸性与刚性 ====================

def convexity_check(space: WeightedLine, K: float, N: float,
                    samples: int = 201, tol: float = 1e-6) -> ConvexityReport:
    """
    N = ∞: min ψ'' − K; N < 0: min ψ'' − (ψ')²/(N−1) − K

    采样点取在有效支撑上
    """
    xs = space.sample_points(samples)
    margins = []
    for x in xs:
        x = float(x)
        value = space.d2psi(x) - K
        if N != math.inf:
            value -= space.dpsi(x) ** 2 / (N - 1.0)
        margins.append(value)
    margins = np.asarray(margins)
    i = int(np.argmin(margins))
    margin = float(margins[i])
    return ConvexityReport(passed=margin >= -tol, margin=margin, argmin=float(xs[i]), K=K, N=N)


def rigidity_detect(space: WeightedLine, K: float, N: float,
                    samples: int = 201, tol: float = 1e-10) -> RigidityReport:
    """
    检测 e^{−ψ} 是否属于模型族

    负维数: f_N = e^{ψ/(1−N)} 应满足 f_N'' = σ f_N, 即 f_N = a·cosh(√σx) + b·sinh(√σx),
    a = f_N(0) > 0, |b/a| < 1, γ = artanh(b/a), k = a/cosh γ;
    残差为采样点上 f_N 相对模型的最大相对偏差.
    N = ∞: 残差为 max |ψ'' − K|, 拟合量为高斯平移 −ψ'(0)/K.
    """
    ModelParams(K, N).require_rigidity_regime()
    xs = space.sample_points(samples)

    if N == math.inf:
        residual = float(max(abs(space.d2psi(float(x)) - K) for x in xs))
        shift = -space.dpsi(0.0) / K
        return RigidityReport(matches_model=residual <= tol, residual=residual,
                              gaussian_shift=shift,
                              diagnostic="" if residual <= tol else "psi'' differs from K")

    params = ModelParams(K, N)
    rs = params.sqrt_sigma
    one_minus_n = 1.0 - N
    log_a = space.psi(0.0) / one_minus_n
    ratio = space.dpsi(0.0) / (one_minus_n * rs)   # b/a
    if not abs(ratio) < 1.0:
        return RigidityReport(matches_model=False, residual=math.inf,
                              diagnostic=f"|b/a| = {abs(ratio):.6g} >= 1: not normalizable in the model family")

    gamma = math.atanh(ratio)
    log_k = log_a - math.log(math.cosh(gamma))

    residual = 0.0
    for x in xs:
        x = float(x)
        deviation = space.psi(x) / one_minus_n - log_k - log_cosh(gamma + rs * x)
        residual = max(residual, abs(math.expm1(deviation)))

    matches = residual <= tol
    logger.debug(f"[Needle1D] Rigidity fit on {space.name}: k={math.exp(log_k):.12g}, "
                 f"gamma={gamma:.12g}, residual={residual:.3e}")
    return RigidityReport(matches_model=matches, residual=residual, k=math.exp(log_k), gamma=gamma,
                          diagnostic="" if matches else "f_N deviates from a*cosh + b*sinh")
