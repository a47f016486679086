"""
统一错误处理模块

提供完整的异常类层次结构、错误处理装饰器、退出码映射和启动检查
"""

import functools
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from loguru import logger


# ==================== 异常类层次结构 ====================

class IsoprofileError(Exception):
    """应用基础异常类"""

    def __init__(self, message: str, details: Optional[str] = None,
                 recovery_hint: Optional[str] = None):
        self.message = message
        self.details = details
        self.recovery_hint = recovery_hint
        super().__init__(self.message)

    def __str__(self):
        msg = self.message
        if self.details:
            msg += f"\n详情: {self.details}"
        if self.recovery_hint:
            msg += f"\n建议: {self.recovery_hint}"
        return msg


class ParameterError(IsoprofileError, ValueError):
    """参数异常 (K, N, D, H 等取值非法)"""
    pass


class DomainError(IsoprofileError, ValueError):
    """定义域异常 (θ 不在 (0,1) 内、方差为零等)"""
    pass


class ConfigError(IsoprofileError):
    """配置异常"""
    pass


# 数值层异常
class NumericsError(IsoprofileError):
    """数值计算异常基类"""
    pass


class IntegrationError(NumericsError):
    """积分未收敛或被积函数返回 NaN"""

    def __init__(self, message: str, partial_estimate: Optional[float] = None,
                 sample_point: Optional[float] = None, **kwargs):
        self.partial_estimate = partial_estimate
        self.sample_point = sample_point
        super().__init__(message, **kwargs)


class RootFindingError(NumericsError):
    """求根失败 (无变号或未收敛)"""

    def __init__(self, message: str, last_bracket: Optional[Sequence[float]] = None, **kwargs):
        self.last_bracket = tuple(last_bracket) if last_bracket is not None else None
        super().__init__(message, **kwargs)


class MinimizationError(NumericsError):
    """一维极小化失败"""
    pass


# 针线 (1-D) 分析异常
class NeedleError(IsoprofileError):
    """一维针线分析异常基类"""
    pass


class HypothesisError(NeedleError):
    """输入不满足定理前提 (对数凹、对称、严格对数凹)"""
    pass


class StepLimitError(NeedleError):
    """平移迭代超过步数上限"""

    def __init__(self, message: str, trajectory: Optional[List[Any]] = None, **kwargs):
        self.trajectory = list(trajectory or [])
        super().__init__(message, **kwargs)


# 谱计算异常
class SpectralError(IsoprofileError):
    """谱计算异常基类"""
    pass


class TailConditionError(SpectralError):
    """截断区间外尾部质量过大"""

    def __init__(self, message: str, required_L: Optional[float] = None, **kwargs):
        self.required_L = required_L
        super().__init__(message, **kwargs)


class MeshResolutionError(IsoprofileError):
    """网格分辨率不足"""

    def __init__(self, message: str, required_n_t: Optional[int] = None,
                 required_n_fiber: Optional[int] = None, **kwargs):
        self.required_n_t = required_n_t
        self.required_n_fiber = required_n_fiber
        super().__init__(message, **kwargs)


class CertificationError(IsoprofileError):
    """认证失败 (存在非正间隙)"""

    def __init__(self, message: str, violations: Optional[List[Dict[str, Any]]] = None, **kwargs):
        self.violations = list(violations or [])
        super().__init__(message, **kwargs)


class StartupError(IsoprofileError):
    """启动时异常"""
    pass


# ==================== 错误级别与退出码 ====================

class ErrorLevel(Enum):
    """错误级别"""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class ExitCode:
    """命令行退出码"""
    OK = 0
    CERTIFICATION_FAILED = 1
    INVALID_INPUT = 2
    NUMERIC_FAILURE = 3
    INTERRUPTED = 130


# ==================== 错误处理器 ====================

class ErrorHandler:
    """
    统一错误处理器

    职责:
    - 记录异常
    - 将异常映射为退出码
    - 错误统计
    """

    def __init__(self):
        self._error_counts: Dict[str, int] = {}

    @staticmethod
    def classify(exc: BaseException) -> ErrorLevel:
        """确定错误级别"""
        if isinstance(exc, (StartupError, ConfigError)):
            return ErrorLevel.CRITICAL
        if isinstance(exc, CertificationError):
            return ErrorLevel.WARNING
        return ErrorLevel.ERROR

    @staticmethod
    def exit_code_for(exc: BaseException) -> int:
        """异常 -> 退出码"""
        if isinstance(exc, KeyboardInterrupt):
            return ExitCode.INTERRUPTED
        if isinstance(exc, CertificationError):
            return ExitCode.CERTIFICATION_FAILED
        if isinstance(exc, (ParameterError, DomainError, ConfigError,
                            HypothesisError, MeshResolutionError, TailConditionError)):
            return ExitCode.INVALID_INPUT
        return ExitCode.NUMERIC_FAILURE

    def handle_exception(self, exc: BaseException, context: str = "") -> int:
        """
        处理异常

        Args:
            exc: 异常对象
            context: 异常上下文信息

        Returns:
            int: 对应的退出码
        """
        # 内层上下文已记录过的异常只做映射
        if getattr(exc, "_isoprofile_handled", False):
            return self.exit_code_for(exc)

        level = self.classify(exc)
        log_msg = f"[{context}] {type(exc).__name__}: {exc}"
        if level == ErrorLevel.CRITICAL:
            logger.critical(log_msg)
        elif level == ErrorLevel.WARNING:
            logger.warning(log_msg)
        else:
            logger.error(log_msg)

        exc_type = type(exc).__name__
        self._error_counts[exc_type] = self._error_counts.get(exc_type, 0) + 1
        exc._isoprofile_handled = True
        return self.exit_code_for(exc)

    def get_error_statistics(self) -> Dict[str, int]:
        """获取错误统计"""
        return self._error_counts.copy()


_error_handler: Optional[ErrorHandler] = None


def get_error_handler() -> ErrorHandler:
    """获取全局错误处理器实例"""
    global _error_handler
    if _error_handler is None:
        _error_handler = ErrorHandler()
    return _error_handler


# ==================== 错误处理装饰器 ====================

T = TypeVar('T')


def handle_errors(context: str = "", reraise: bool = False):
    """
    错误处理装饰器

    被装饰函数应返回退出码; 发生 IsoprofileError 时返回映射后的退出码

    Args:
        context: 操作上下文描述
        reraise: 是否重新抛出异常
    """
    def decorator(func: Callable[..., int]) -> Callable[..., int]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                return func(*args, **kwargs)
            except IsoprofileError as e:
                code = get_error_handler().handle_exception(e, context or func.__name__)
                if reraise:
                    raise
                return code
        return wrapper
    return decorator


class ErrorContext:
    """
    错误上下文管理器

    用法:
        with ErrorContext("K1 窗口搜索"):
            ...
    """

    def __init__(self, context: str, reraise: bool = True):
        self.context = context
        self.reraise = reraise
        self.exit_code: Optional[int] = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None and issubclass(exc_type, IsoprofileError):
            self.exit_code = get_error_handler().handle_exception(exc_val, self.context)
            return not self.reraise
        return False


# ==================== 启动检查 ====================

def check_startup_requirements() -> List[StartupError]:
    """
    检查启动时必需的条件

    Returns:
        list: 错误列表，为空表示所有检查通过
    """
    errors: List[StartupError] = []
    required = {
        "numpy": "numpy",
        "scipy": "scipy",
        "pandas": "pandas",
        "networkx": "networkx",
        "pydantic": "pydantic",
        "yaml": "PyYAML",
    }
    for module_name, package in required.items():
        try:
            __import__(module_name)
        except ImportError:
            errors.append(StartupError(
                f"{package}未安装",
                f"请运行: pip install {package}",
                "或者: pip install -r requirements.txt"
            ))
    return errors
