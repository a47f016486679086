"""
二维翘曲积 ℝ ×_{cosh(√σt)} S¹

度量 dt² + cosh²(√σt)·dx², 测度 cosh^{N−1}(√σt)dt·m_Σ(dx)/m_{K,N}, 纤维为周长 L 的圆
(均匀概率测度). 提供:
- 半空间 {t ≤ r} 与混合集合 Q1×(−∞,r] ∪ Q2×[r̄,∞) 的测度
- 半空间边界恒等式与混合集合的严格超出量分解
- 网格图上 Dijkstra 膨胀给出的 (m(A^ε) − m(A))/ε
"""

import math
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Any, Dict, List, Optional, Set, Tuple, Union

import networkx as nx
import numpy as np
from loguru import logger

from backend.error_handler import DomainError, MeshResolutionError
from backend.model_params import ModelParams
from backend.model_profiles import (
    cosh_cdf,
    cosh_density,
    cosh_mass,
    cosh_quantile,
    cosh_sf,
    log_cosh,
    model_mass_neg,
)
from backend.numerics import DEFAULT_TOLERANCE, Interval, ToleranceConfig, integrate


# ==================== 空间与集合 ====================

@dataclass(frozen=True)
class WarpedProduct:
    """翘曲积模型空间"""
    params: ModelParams
    fiber_circumference: float = 2.0 * math.pi
    tol: ToleranceConfig = DEFAULT_TOLERANCE

    def __post_init__(self):
        self.params.require_negative()
        if not (math.isfinite(self.fiber_circumference) and self.fiber_circumference > 0):
            raise DomainError(f"fiber circumference must be positive, got {self.fiber_circumference}")

    @property
    def mass(self) -> float:
        return model_mass_neg(self.params, self.tol)

    @property
    def fiber_boundary(self) -> float:
        """真子弧的 m_Σ⁺ = 2/L"""
        return 2.0 / self.fiber_circumference

    def column_density(self, t: float) -> float:
        return cosh_density(self.params, t) / self.mass

    def column_mass_below(self, r: float) -> float:
        """∫_{−∞}^r cosh^{N−1}(√σt)dt/m (求积)"""
        if r == -math.inf:
            return 0.0
        if r == math.inf:
            return 1.0
        rs = self.params.sqrt_sigma
        return integrate(self.column_density, Interval(-math.inf, r), self.tol, scale=1.0 / rs).value

    def column_mass_above(self, r: float) -> float:
        if r == math.inf:
            return 0.0
        if r == -math.inf:
            return 1.0
        rs = self.params.sqrt_sigma
        return integrate(self.column_density, Interval(r, math.inf), self.tol, scale=1.0 / rs).value

    def level_for_mass(self, theta: float) -> float:
        """r(θ): m({t ≤ r}) = θ"""
        return cosh_quantile(self.params, theta, self.tol)


@dataclass(frozen=True)
class Arc:
    """圆上的弧 [start, start + fraction) (以周长的比例计, 取模 1)"""
    start: float
    fraction: float

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise DomainError(f"arc fraction must lie in (0,1), got {self.fraction}",
                              recovery_hint="Q1 为空或为整个纤维时混合集合退化")

    def contains(self, x: float) -> bool:
        """x 为 [0,1) 内的纤维坐标"""
        return (x - self.start) % 1.0 < self.fraction

    def contains_array(self, xs: np.ndarray) -> np.ndarray:
        return np.mod(xs - self.start, 1.0) < self.fraction


@dataclass(frozen=True)
class HalfSpace:
    """{t ≤ r}; r = −inf 为空集, r = +inf 为全空间"""
    r: float


@dataclass(frozen=True)
class Mixed:
    """Q1×(−∞, r] ∪ Q2×[r̄, ∞), Q2 为 Q1 的补弧"""
    q1: Arc
    r: float
    r_bar: float

    @classmethod
    def at_common_mass(cls, space: WarpedProduct, q1: Arc, theta: float) -> 'Mixed':
        """两列的质量都为 θ: r = c(θ), r̄ = c(1−θ) = −c(θ)"""
        r = space.level_for_mass(theta)
        return cls(q1=q1, r=r, r_bar=-r)


SetSpec = Union[HalfSpace, Mixed]


def measure(space: WarpedProduct, set: SetSpec) -> float:
    """Fubini: 纤维质量 × 列质量"""
    if isinstance(set, HalfSpace):
        return space.column_mass_below(set.r)
    q1 = set.q1.fraction
    return q1 * space.column_mass_below(set.r) + (1.0 - q1) * space.column_mass_above(set.r_bar)


def halfspace_boundary(space: WarpedProduct, r: float) -> float:
    """m⁺({t ≤ r}) = cosh^{N−1}(√σr)/m_{K,N}"""
    if math.isinf(r):
        return 0.0
    return space.column_density(r)


# ==================== 混合集合的超出量 ====================

@dataclass(frozen=True)
class MixedExcess:
    """
    m⁺(A) ≥ m_Σ(Q1)·I(θ) + m_Σ(Q2)·I(θ) + (c/k)·m_Σ⁺(Q1) 的各项

    exact_horizontal 为纤维边界在 t 上的完整积分, 作为对照一并给出
    """
    theta: float
    profile_value: float
    vertical_terms: Tuple[float, float]
    horizontal_term: float
    strict_excess: float
    c: float
    k: float
    b: float
    exact_horizontal: float

    @property
    def lower_bound(self) -> float:
        return sum(self.vertical_terms) + self.horizontal_term

    @property
    def exact_boundary(self) -> float:
        return sum(self.vertical_terms) + self.exact_horizontal

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["vertical_terms"] = list(self.vertical_terms)
        out["lower_bound"] = self.lower_bound
        out["exact_boundary"] = self.exact_boundary
        return out


def _common_mass(space: WarpedProduct, set: Mixed, atol: float = 1e-10) -> float:
    below = cosh_cdf(space.params, set.r)
    above = cosh_sf(space.params, set.r_bar)
    if abs(below - above) > atol:
        raise DomainError(f"columns must carry equal mass, got {below:.12g} and {above:.12g}",
                          recovery_hint="用 Mixed.at_common_mass 构造")
    return below


def exact_horizontal_boundary(space: WarpedProduct, set: Mixed) -> float:
    """
    (2/L)/m · ∫ cosh^{N−2}(√σt) dt, 积分区域为两列成员关系不同的 t:
    (−∞, min(r, r̄)) ∪ (max(r, r̄), ∞)
    """
    params = space.params
    rs, p = params.sqrt_sigma, params.N - 2.0
    f = lambda t: math.exp(p * log_cosh(rs * t))
    lo, hi = min(set.r, set.r_bar), max(set.r, set.r_bar)
    total = (integrate(f, Interval(-math.inf, lo), space.tol, scale=1.0 / rs).value
             + integrate(f, Interval(hi, math.inf), space.tol, scale=1.0 / rs).value)
    return space.fiber_boundary * total / space.mass


def mixed_excess(space: WarpedProduct, set: Mixed, b: float) -> MixedExcess:
    """
    c = (1/m)∫_b^{top} cosh^{N−1}, k = max_{[b, top]} cosh(√σ·), top = min(r, r̄)

    strict_excess = (c/k)·(2/L) > 0, 与 m_Σ(Q1) 无关
    """
    theta = _common_mass(space, set)
    top = min(set.r, set.r_bar)
    if not b < top:
        raise DomainError(f"b must be below min(r, r_bar) = {top}, got {b}")

    params = space.params
    I = halfspace_boundary(space, set.r)
    q1 = set.q1.fraction
    c = cosh_mass(params, b, top)
    rs = params.sqrt_sigma
    k = max(math.cosh(rs * b), math.cosh(rs * top))
    horizontal = c / k * space.fiber_boundary
    if not horizontal > 0:
        raise DomainError(f"strict excess must be positive, got {horizontal}")

    return MixedExcess(theta=theta, profile_value=I, vertical_terms=(q1 * I, (1.0 - q1) * I),
                       horizontal_term=horizontal, strict_excess=horizontal, c=c, k=k, b=b,
                       exact_horizontal=exact_horizontal_boundary(space, set))


# ==================== 网格图 ====================

class GridMesh:
    """
    [−L_t, L_t] × S¹ 上的网格图

    第 i 行代表 t 方向的单元 [t_i − h/2, t_i + h/2] (首尾单元延伸到 ±∞, 总质量为 1);
    竖直边长 h_t, 第 i 行水平边长 cosh(√σt_i)·L/n_fiber.
    """

    def __init__(self, space: WarpedProduct, n_t: int = 400, n_fiber: int = 256,
                 t_half_width: Optional[float] = None):
        if n_t < 16 or n_fiber < 8:
            raise DomainError(f"mesh needs n_t >= 16 and n_fiber >= 8, got {n_t}, {n_fiber}")
        self.space = space
        self.n_t = n_t
        self.n_fiber = n_fiber
        rs = space.params.sqrt_sigma
        self.L_t = t_half_width if t_half_width is not None else 12.0 / rs
        self.t = np.linspace(-self.L_t, self.L_t, n_t)
        self.h_t = float(self.t[1] - self.t[0])
        self.fiber = (np.arange(n_fiber) + 0.5) / n_fiber
        self.fiber_step = space.fiber_circumference / n_fiber

        cuts = np.concatenate(([-math.inf], 0.5 * (self.t[:-1] + self.t[1:]), [math.inf]))
        self.row_mass = np.array([cosh_mass(space.params, float(lo), float(hi))
                                  for lo, hi in zip(cuts[:-1], cuts[1:])])
        self.cuts = cuts

    def horizontal_length(self, t: float) -> float:
        return math.cosh(self.space.params.sqrt_sigma * t) * self.fiber_step

    @cached_property
    def graph(self) -> nx.Graph:
        n_t, n_f = self.n_t, self.n_fiber
        G = nx.Graph()
        G.add_nodes_from(range(n_t * n_f))
        edges = []
        for i in range(n_t):
            w = self.horizontal_length(float(self.t[i]))
            base = i * n_f
            for j in range(n_f):
                edges.append((base + j, base + (j + 1) % n_f, w))
                if i + 1 < n_t:
                    edges.append((base + j, base + n_f + j, self.h_t))
        G.add_weighted_edges_from(edges)
        logger.debug(f"[Warped2D] Built mesh graph: {G.number_of_nodes()} nodes, {G.number_of_edges()} edges")
        return G

    def membership(self, set: SetSpec) -> np.ndarray:
        """(n_t, n_fiber) 布尔数组"""
        rows = self.t[:, None]
        if isinstance(set, HalfSpace):
            return np.broadcast_to(rows <= set.r, (self.n_t, self.n_fiber)).copy()
        in_q1 = set.q1.contains_array(self.fiber)[None, :]
        return np.where(in_q1, rows <= set.r, rows >= set.r_bar)

    def node_mass(self) -> np.ndarray:
        return np.repeat(self.row_mass[:, None] / self.n_fiber, self.n_fiber, axis=1)


def _required_resolution(mesh: GridMesh, set: SetSpec, eps: float) -> Tuple[Optional[int], Optional[int]]:
    required_n_t = None
    required_n_f = None
    if eps < 2.0 * mesh.h_t:
        required_n_t = int(math.ceil(4.0 * mesh.L_t / eps)) + 1
    if isinstance(set, Mixed):
        levels = [r for r in (set.r, set.r_bar) if math.isfinite(r)]
        worst = max((mesh.horizontal_length(r) for r in levels), default=0.0)
        if worst > 0.5 * eps:
            scale = worst / mesh.fiber_step
            required_n_f = int(math.ceil(2.0 * scale * mesh.space.fiber_circumference / eps))
    return required_n_t, required_n_f


def grid_eps_boundary(space: WarpedProduct, mesh: GridMesh, set: SetSpec, eps: float) -> float:
    """
    (m(A^ε) − m(A))/ε, A^ε 为网格图上最短路距离 ≤ ε 的节点

    ε 向下取整到 h_t 的整数倍, 使半空间的膨胀恰好覆盖整行

    Raises:
        MeshResolutionError: ε < 2h_t 或边界处水平边长 > ε/2
    """
    if not eps > 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    if isinstance(set, HalfSpace) and math.isinf(set.r):
        return 0.0

    required_n_t, required_n_f = _required_resolution(mesh, set, eps)
    if required_n_t or required_n_f:
        raise MeshResolutionError(
            f"mesh does not resolve eps={eps}",
            required_n_t=required_n_t, required_n_fiber=required_n_f,
            details=f"h_t={mesh.h_t:.4g}, n_t={mesh.n_t}, n_fiber={mesh.n_fiber}",
        )

    eps_eff = math.floor(eps / mesh.h_t + 1e-9) * mesh.h_t
    inside = mesh.membership(set)
    if not inside.any():
        return 0.0
    masses = mesh.node_mass()

    sources = _boundary_nodes(mesh, inside)
    if not sources:
        return 0.0
    reached = nx.multi_source_dijkstra_path_length(mesh.graph, sources,
                                                   cutoff=eps_eff * (1.0 + 1e-9))
    flat_inside = inside.ravel()
    flat_mass = masses.ravel()
    added = sum(flat_mass[v] for v in reached if not flat_inside[v])
    value = added / eps_eff
    logger.debug(f"[Warped2D] eps={eps_eff:.4g}: added mass {added:.6g}, boundary estimate {value:.6g}")
    return float(value)


def _boundary_nodes(mesh: GridMesh, inside: np.ndarray) -> Set[int]:
    """集合内与集合外节点相邻的节点"""
    outside = ~inside
    touches = np.zeros_like(inside)
    touches[:-1] |= outside[1:]
    touches[1:] |= outside[:-1]
    touches |= np.roll(outside, 1, axis=1) | np.roll(outside, -1, axis=1)
    boundary = inside & touches
    return set(int(v) for v in np.flatnonzero(boundary.ravel()))


def mixed_configurations(space: WarpedProduct, theta: float, count: int = 10) -> List[Mixed]:
    """θ 质量下的一组确定性混合集合 (弧长与起点均匀铺开)"""
    fractions = np.linspace(0.1, 0.9, count)
    starts = np.linspace(0.0, 0.5, count)
    return [Mixed.at_common_mass(space, Arc(float(s), float(f)), theta)
            for s, f in zip(starts, fractions)]
