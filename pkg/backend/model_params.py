"""
模型参数 - 曲率 K、有效维数 N、直径 D 及其派生量

N 与 D 的无穷值用 math.inf 标记 (N = ∞ 为高斯分支, D = ∞ 为无界直径)
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Union

from backend.error_handler import ParameterError


class ProfileBranch(Enum):
    """模型轮廓的分支"""
    GAUSS_INF = "GaussInf"
    GAUSS_D = "GaussD"
    NEG_INF = "NegInf"
    K1 = "K1"
    K2 = "K2"
    K3 = "K3"


def parse_extended(value: Union[str, float, int], name: str) -> float:
    """解析可能为字面量 'inf' 的参数"""
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "+inf", "infinity", "∞"):
            return math.inf
        try:
            return float(token)
        except ValueError:
            raise ParameterError(f"{name} must be a number or 'inf', got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ModelParams:
    """
    模型参数

    Attributes:
        K: 曲率下界, > 0
        N: 有效维数, math.inf 或 < 0
        D: 直径, > 0 或 math.inf
    """
    K: float
    N: float = math.inf
    D: float = math.inf

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K > 0):
            raise ParameterError(f"K must be a finite positive number, got {self.K}")
        if not (self.N == math.inf or (math.isfinite(self.N) and self.N < 0)):
            raise ParameterError(f"N must be inf or negative, got {self.N}",
                                 recovery_hint="N ∈ [n, ∞) 的情形不在本工具范围内")
        if not (self.D == math.inf or (math.isfinite(self.D) and self.D > 0)):
            raise ParameterError(f"D must be positive or inf, got {self.D}")

    @property
    def is_gaussian(self) -> bool:
        return self.N == math.inf

    @property
    def is_bounded(self) -> bool:
        return self.D != math.inf

    @property
    def sigma(self) -> float:
        """σ = K/(1−N) (仅负维数)"""
        if self.is_gaussian:
            raise ParameterError("sigma is defined only for negative N")
        return self.K / (1.0 - self.N)

    @property
    def sqrt_sigma(self) -> float:
        return math.sqrt(self.sigma)

    @property
    def exp_rate(self) -> float:
        """指数模型的速率 λ = (N−1)√σ < 0"""
        return (self.N - 1.0) * self.sqrt_sigma

    @property
    def rigidity_regime(self) -> bool:
        """刚性结论适用范围: N = ∞ 或 N < −1"""
        return self.is_gaussian or self.N < -1.0

    def require_negative(self) -> None:
        if self.is_gaussian:
            raise ParameterError("operation requires negative N")

    def require_rigidity_regime(self) -> None:
        if not self.rigidity_regime:
            raise ParameterError(f"rigidity checks require N < -1 or N = inf, got N={self.N}")

    def to_dict(self) -> Dict[str, Any]:
        """JSON 友好的表示 (无穷值写作 'inf')"""
        def fmt(x: float) -> Union[float, str]:
            return "inf" if x == math.inf else x
        return {"K": self.K, "N": fmt(self.N), "D": fmt(self.D)}

    def __str__(self) -> str:
        d = self.to_dict()
        return f"ModelParams(K={d['K']}, N={d['N']}, D={d['D']})"


@dataclass(frozen=True)
class NeedleDensityParams:
    """针线密度 J_H 的参数"""
    params: ModelParams
    H: float

    def __post_init__(self):
        if not math.isfinite(self.H):
            raise ParameterError(f"H must be finite, got {self.H}")
        if not self.params.is_gaussian and abs(self.beta) >= 1.0:
            raise ParameterError(
                f"|H/((N-1)√σ)| must be < 1 for integrability, got β={self.beta}",
            )

    @property
    def beta(self) -> Optional[float]:
        """β = H/((N−1)√σ) (负维数分支)"""
        if self.params.is_gaussian:
            return None
        return self.H / self.params.exp_rate

    @property
    def alpha(self) -> Optional[float]:
        """α = artanh β"""
        beta = self.beta
        return None if beta is None else math.atanh(beta)
