"""
运行配置 - 命令行参数经 pydantic 校验后形成的不可变配置

θ 网格支持两种写法:
- 区间 "a:b:step" (含端点, 步数四舍五入到整数)
- 逗号列表 "0.1,0.5,0.9"
"""

import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from backend.error_handler import DomainError, ParameterError
from backend.model_params import ModelParams, parse_extended
from backend.numerics import ToleranceConfig


class Command(str, Enum):
    """子命令"""
    PROFILE = "profile"
    VERIFY_APPENDIX = "verify-appendix"
    NEEDLE = "needle"
    SPECTRAL = "spectral"
    WARPED = "warped"
    DERIVATIVE_CHECK = "derivative-check"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


# 报告类命令默认输出 JSON, 表格类命令默认输出 CSV
_REPORT_COMMANDS = {Command.NEEDLE, Command.SPECTRAL, Command.WARPED}

DEFAULT_THETAS = "0.05:0.95:0.05"


# ==================== 网格解析 ====================

def parse_theta_grid(text: str) -> List[float]:
    """
    解析 θ 网格

    Raises:
        DomainError: 格式错误、θ ∉ (0,1) 或非严格递增
    """
    text = text.strip()
    if not text:
        raise DomainError("theta grid is empty")

    if ":" in text:
        pieces = text.split(":")
        if len(pieces) != 3:
            raise DomainError(f"theta range must be 'start:stop:step', got {text!r}")
        try:
            start, stop, step = (float(p) for p in pieces)
        except ValueError:
            raise DomainError(f"theta range has a non-numeric part: {text!r}")
        if not step > 0 or stop < start:
            raise DomainError(f"theta range needs step > 0 and stop >= start, got {text!r}")
        count = int(round((stop - start) / step)) + 1
        values = [round(start + i * step, 12) for i in range(count)]
    else:
        try:
            values = [float(p) for p in text.split(",") if p.strip()]
        except ValueError:
            raise DomainError(f"theta list has a non-numeric entry: {text!r}")

    check_theta_grid(values)
    return values


def check_theta_grid(values: List[float]) -> None:
    if not values:
        raise DomainError("theta grid is empty")
    for theta in values:
        if not 0.0 < theta < 1.0:
            raise DomainError(f"theta must lie in (0,1), got {theta}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError("theta grid must be strictly increasing")


def parse_float_list(text: str, name: str) -> List[float]:
    """逗号分隔的数值列表, 元素可以是字面量 'inf'"""
    values = [parse_extended(p, name) for p in text.split(",") if p.strip()]
    if not values:
        raise ParameterError(f"{name} list is empty")
    return values


def parse_intervals(text: str) -> List[Tuple[float, float]]:
    """'a:b,c:d' -> [(a, b), (c, d)], 端点可为 ±inf"""
    parts = []
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        bounds = chunk.split(":")
        if len(bounds) != 2:
            raise ParameterError(f"interval must be 'lo:hi', got {chunk!r}")
        lo, hi = (_signed_extended(b) for b in bounds)
        parts.append((lo, hi))
    if not parts:
        raise ParameterError("interval list is empty")
    return parts


def _signed_extended(token: str) -> float:
    token = token.strip()
    if token.startswith("-"):
        return -parse_extended(token[1:], "interval endpoint")
    return parse_extended(token, "interval endpoint")


# ==================== 运行配置 ====================

class RunConfig(BaseModel):
    """
    一次命令行运行的完整配置

    构造即校验; 输出格式在任何计算开始前确定
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    K: float = 1.0
    N: float = math.inf
    D: float = math.inf
    thetas: List[float] = Field(default_factory=lambda: parse_theta_grid(DEFAULT_THETAS))
    output_path: Optional[str] = None
    format: Optional[OutputFormat] = None

    # 容差与并行度覆盖
    abs_tol: Optional[float] = None
    rel_tol: Optional[float] = None
    threads: Optional[int] = None

    # verify-appendix
    K_grid: List[float] = Field(default_factory=lambda: [1.0])
    N_grid: List[float] = Field(default_factory=lambda: [-2.0, -5.0, -10.0])
    D_grid: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0])
    gaussian: bool = False

    # needle / spectral 的一维空间
    density: str = "cosh"
    gamma: float = 0.0
    k: float = 1.0
    shift: float = 0.0
    poly: List[float] = Field(default_factory=list)
    trig: List[Tuple[float, float, float]] = Field(default_factory=list)
    table: Optional[str] = None
    rigidity: bool = False
    brute_force: bool = False
    brute_grid: int = 400
    reduce_set: Optional[List[Tuple[float, float]]] = None

    # spectral
    n_values: List[int] = Field(default_factory=lambda: [501, 1001, 2001, 4001])
    L: Optional[float] = None

    # warped
    q1: float = 0.5
    q1_start: float = 0.0
    b: Optional[float] = None
    eps: float = 0.25
    grid: bool = False
    n_t: Optional[int] = None
    n_fiber: Optional[int] = None
    sweep: int = 0

    # derivative-check
    fd_tol: float = 1e-6

    @field_validator("N", "D", mode="before")
    @classmethod
    def _extended(cls, value: Any, info) -> float:
        return parse_extended(value, info.field_name)

    @field_validator("thetas")
    @classmethod
    def _thetas(cls, value: List[float]) -> List[float]:
        check_theta_grid(value)
        return value

    @field_validator("density")
    @classmethod
    def _density(cls, value: str) -> str:
        if value not in ("gaussian", "cosh", "exp", "poly", "table"):
            raise ValueError(f"unknown density {value!r}")
        return value

    @field_validator("n_values")
    @classmethod
    def _n_values(cls, value: List[int]) -> List[int]:
        if not value or any(n < 16 for n in value):
            raise ValueError("spectral grid sizes must be >= 16")
        return sorted(set(value))

    @model_validator(mode="after")
    def _resolve(self) -> 'RunConfig':
        ModelParams(self.K, self.N, self.D)
        if self.command == Command.VERIFY_APPENDIX:
            for n in self.N_grid:
                if not self.gaussian and not n < 0:
                    raise ValueError(f"verify-appendix needs N < 0, got {n}")
            for d in self.D_grid:
                if not (math.isfinite(d) and d > 0):
                    raise ValueError(f"verify-appendix needs finite D > 0, got {d}")
        if self.density == "table" and not self.table:
            raise ValueError("density 'table' needs a potential table path")
        return self

    @property
    def output_format(self) -> OutputFormat:
        """显式格式优先, 其次按输出文件后缀, 最后按命令类型"""
        if self.format is not None:
            return self.format
        if self.output_path:
            suffix = Path(self.output_path).suffix.lower()
            if suffix == ".json":
                return OutputFormat.JSON
            if suffix == ".csv":
                return OutputFormat.CSV
        return OutputFormat.JSON if self.command in _REPORT_COMMANDS else OutputFormat.CSV

    # ==================== 构造与派生量 ====================

    @classmethod
    def build(cls, **values: Any) -> 'RunConfig':
        """
        构造配置, 把 pydantic 校验错误统一转换为 ParameterError

        Raises:
            ParameterError: 任何字段非法
        """
        clean = {k: v for k, v in values.items() if v is not None}
        try:
            return cls(**clean)
        except ValidationError as e:
            messages = [f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
                        for err in e.errors()]
            raise ParameterError("invalid run configuration", details="; ".join(messages))

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.K, self.N, self.D)

    def tolerance(self, base: Optional[ToleranceConfig] = None) -> ToleranceConfig:
        """全局容差叠加命令行覆盖"""
        base = base or ToleranceConfig.from_app_config()
        return ToleranceConfig(abs_tol=self.abs_tol or base.abs_tol,
                               rel_tol=self.rel_tol or base.rel_tol,
                               max_evals=base.max_evals)

    def describe(self) -> Dict[str, Any]:
        """报告头部使用的参数摘要"""
        return {"command": self.command.value, **self.params.to_dict()}
