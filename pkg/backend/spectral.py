"""
谱计算模块 - 加权 (Witten) Laplacian Δ_m u = u'' − ψ'u' 的离散化

守恒通量格式:
    (Δ_m u)_i = [w_{i+1/2}(u_{i+1} − u_i) − w_{i−1/2}(u_i − u_{i−1})] / (w_i h²)
w = e^{−ψ}, 两端零通量; 离散测度 μ_i = w_i·h 下算子对称, 常数向量精确属于核.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import linalg, sparse

from backend.error_handler import DomainError, SpectralError, TailConditionError
from backend.numerics import DEFAULT_TOLERANCE, Interval, ToleranceConfig, central_difference, integrate
from backend.weighted_line import WeightedLine


# ==================== 网格 ====================

@dataclass(frozen=True)
class Grid1D:
    """[−L, L] 上的均匀网格"""
    L: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise DomainError(f"L must be finite and positive, got {self.L}")
        if self.n < 16:
            raise DomainError(f"n must be >= 16, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    def midpoints(self) -> np.ndarray:
        x = self.nodes()
        return 0.5 * (x[:-1] + x[1:])

    @classmethod
    def for_space(cls, space: WeightedLine, n: int, tail_tol: float = 1e-8,
                  weight: Optional[Callable[[float], float]] = None) -> 'Grid1D':
        """
        自动选择 L: 截断外的测度 (给出 weight 时为 ∫ weight·dm) 相对值低于 tail_tol

        L 从有效支撑的一半起倍增
        """
        L = max(1.0, 0.5 * min(abs(space.support.lo), abs(space.support.hi)))
        for _ in range(30):
            if tail_fraction(space, L, weight) < tail_tol:
                return cls(L, n)
            L *= 1.5
        raise TailConditionError("could not find a truncation satisfying the tail condition",
                                 required_L=L)


def tail_fraction(space: WeightedLine, L: float,
                  weight: Optional[Callable[[float], float]] = None) -> float:
    """[−L, L] 外的相对质量"""
    if weight is None:
        return space.cdf(-L) + space.sf(L)
    f = lambda x: weight(x) * space.density(x)
    tol = space.tol
    total = integrate(f, space.domain, tol, center=space.center, scale=space.scale).value
    outside = (integrate(f, Interval(-math.inf, -L), tol, scale=space.scale).value
               + integrate(f, Interval(L, math.inf), tol, scale=space.scale).value)
    return outside / total


def check_tail_condition(space: WeightedLine, grid: Grid1D, tail_tol: float = 1e-8) -> None:
    """截断外质量须低于 tail_tol, 否则给出所需 L"""
    fraction = tail_fraction(space, grid.L)
    if fraction >= tail_tol:
        required = Grid1D.for_space(space, grid.n, tail_tol).L
        raise TailConditionError(
            f"tail mass {fraction:.3e} beyond ±{grid.L} exceeds {tail_tol:.0e}",
            required_L=required,
        )


# ==================== 算子 ====================

class WeightedLaplacian:
    """
    三对角离散算子, 节点权 w_i 与半点权 w_{i±1/2} 按参考值 ψ(0) 缩放以避免下溢
    """

    def __init__(self, space: WeightedLine, grid: Grid1D):
        self.space = space
        self.grid = grid
        x = grid.nodes()
        ref = space.psi(space.center)
        self.x = x
        self.w = np.exp(ref - np.array([space.psi(float(t)) for t in x]))
        self.w_half = np.exp(ref - np.array([space.psi(float(t)) for t in grid.midpoints()]))
        self.mu = self.w * grid.h

        h2 = grid.h ** 2
        flux_left = np.concatenate(([0.0], self.w_half))
        flux_right = np.concatenate((self.w_half, [0.0]))
        self._diag = -(flux_left + flux_right) / (self.w * h2)
        self._upper = self.w_half / (self.w[:-1] * h2)
        self._lower = self.w_half / (self.w[1:] * h2)

    @property
    def matrix(self) -> sparse.csr_matrix:
        return sparse.diags([self._lower, self._diag, self._upper], [-1, 0, 1], format="csr")

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Δ_m u"""
        return self.matrix @ np.asarray(u, dtype=float)

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """⟨u, v⟩_μ"""
        return float(np.sum(self.mu * u * v))

    def mean(self, u: np.ndarray) -> float:
        return self.inner(u, np.ones_like(u)) / float(np.sum(self.mu))

    def dirichlet_form(self, u: np.ndarray, v: np.ndarray) -> float:
        """Σ w_{i+1/2}(Δu)(Δv)/h = ⟨u, −Δ_m v⟩_μ"""
        return float(np.sum(self.w_half * np.diff(u) * np.diff(v)) / self.grid.h)

    def symmetric_bands(self):
        """M^{1/2}(−Δ_m)M^{−1/2} 的主对角与次对角"""
        h2 = self.grid.h ** 2
        off = -self.w_half / (h2 * np.sqrt(self.w[:-1] * self.w[1:]))
        return -self._diag, off


def assemble_weighted_laplacian(space: WeightedLine, grid: Grid1D,
                                tail_tol: float = 1e-8) -> WeightedLaplacian:
    check_tail_condition(space, grid, tail_tol)
    return WeightedLaplacian(space, grid)


# ==================== 特征值 ====================

@dataclass
class SpectralResult:
    """第一非零特征值及其 (均值为零、μ-归一化) 特征向量"""
    lambda1: float
    eigenvector: np.ndarray
    rayleigh: float
    grid: Grid1D
    nodes: np.ndarray
    weights: np.ndarray

    def to_dict(self) -> Dict[str, float]:
        return {"lambda1": self.lambda1, "rayleigh": self.rayleigh,
                "L": self.grid.L, "n": self.grid.n, "h": self.grid.h}


def first_nonzero_eigenvalue(space: WeightedLine, grid: Grid1D,
                             tail_tol: float = 1e-8) -> SpectralResult:
    """
    −Δ_m 在均值为零子空间上的最小特征值

    对称化三对角矩阵的最小两个特征对由 LAPACK 二分法 + 逆迭代给出;
    下标 0 为常数模, 下标 1 即所求.
    """
    op = assemble_weighted_laplacian(space, grid, tail_tol)
    d, e = op.symmetric_bands()
    try:
        values, vectors = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, 1))
    except (linalg.LinAlgError, ValueError) as exc:
        raise SpectralError(f"tridiagonal eigen-solve failed: {exc}")

    lambda1 = float(values[1])
    u = vectors[:, 1] / np.sqrt(op.w)
    u = u - op.mean(u)
    u = u / math.sqrt(op.inner(u, u))
    # 符号约定: 与 x 正相关
    if op.inner(u, op.x) < 0:
        u = -u
    rayleigh = op.dirichlet_form(u, u) / op.inner(u, u)
    logger.debug(f"[Spectral] {space.name}: n={grid.n}, L={grid.L}, lambda1={lambda1:.12g}")
    return SpectralResult(lambda1=lambda1, eigenvector=u, rayleigh=rayleigh, grid=grid,
                          nodes=op.x, weights=op.mu)


def rayleigh_quotient(space: WeightedLine, v: Callable[[float], float],
                      dv: Optional[Callable[[float], float]] = None,
                      tol: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """∫|v'|² dm / ∫(v − v̄)² dm (求积, 不使用网格)"""
    dv = dv or (lambda x: central_difference(v, x))

    def expect(f: Callable[[float], float]) -> float:
        return integrate(lambda x: f(x) * space.density(x), space.domain, tol,
                         center=space.center, scale=space.scale).value

    mean = expect(v)
    variance = expect(lambda x: (v(x) - mean) ** 2)
    if not variance > 0:
        raise DomainError("test function has zero variance")
    return expect(lambda x: dv(x) ** 2) / variance


def eigenfunction_compare(result: SpectralResult, model: Callable[[float], float]) -> float:
    """最优数乘后的相对加权 L² 距离 ‖u − c·m‖_μ/‖u‖_μ"""
    u = result.eigenvector
    mu = result.weights
    m = np.array([model(float(t)) for t in result.nodes])
    m = m - np.sum(mu * m) / np.sum(mu)
    mm = float(np.sum(mu * m * m))
    uu = float(np.sum(mu * u * u))
    if mm == 0.0:
        return 1.0
    c = float(np.sum(mu * u * m)) / mm
    return math.sqrt(float(np.sum(mu * (u - c * m) ** 2)) / uu)


def convergence_table(space: WeightedLine, ns: Sequence[int], L: float,
                      exact: Optional[float] = None,
                      tail_tol: float = 1e-8) -> List[Dict[str, Optional[float]]]:
    """
    网格加密序列上的 λ₁、误差与经验收敛阶

    无精确值时误差用最细网格结果代替
    """
    ns = sorted(ns)
    results = [first_nonzero_eigenvalue(space, Grid1D(L, n), tail_tol) for n in ns]
    reference = exact if exact is not None else results[-1].lambda1
    rows: List[Dict[str, Optional[float]]] = []
    previous = None
    for n, res in zip(ns, results):
        error = abs(res.lambda1 - reference)
        order = None
        if previous is not None and previous[1] > 0 and error > 0:
            order = math.log(previous[1] / error) / math.log(previous[0] / res.grid.h)
        rows.append({"n": n, "h": res.grid.h, "lambda1": res.lambda1, "error": error, "order": order})
        previous = (res.grid.h, error)
    return rows
