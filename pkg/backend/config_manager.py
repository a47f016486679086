"""
配置管理模块 - 统一管理求解器与命令行配置
- YAML格式配置文件
- 分层配置(默认配置 + 用户配置)
- 配置验证和类型检查
- 环境变量覆盖
"""

import math
import os
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from loguru import logger


@dataclass
class AppConfig:
    """应用配置类"""

    # 数值容差
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_evals: int = 1_000_000

    # 极小化与窗口搜索
    prescan_points: int = 64
    k1_window_scale: float = 10.0      # Ξ = scale/√σ + D
    k2_xi_min_scale: float = 1e-6      # ξ_min = scale/√σ

    # 一维针线分析
    fd_step: float = 1e-5              # 一阶差分 h = fd_step·(1+|x|)
    fd_step_second: float = 1e-4       # 二阶差分 h = fd_step_second·(1+|x|)
    mass_tail: float = 1e-12
    shift_step_fraction: float = 1e-2
    max_shift_steps: int = 2000

    # 谱计算
    spectral_tail_tol: float = 1e-8

    # 二维翘曲积网格
    mesh_n_t: int = 400
    mesh_n_fiber: int = 256
    fiber_circumference: float = 2.0 * math.pi

    # 性能配置 (0 表示按物理核数自动选择)
    threads: int = 0

    # 日志配置
    log_level: str = "INFO"
    log_file: Optional[str] = None

    # 路径配置
    output_dir: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AppConfig':
        """从字典创建配置"""
        # 过滤掉不存在的字段
        valid_fields = {f.name for f in cls.__dataclass_fields__.values()}
        filtered_data = {k: v for k, v in data.items() if k in valid_fields}
        return cls(**filtered_data)

    def validate(self) -> List[str]:
        """验证配置"""
        errors = []

        for name in ("abs_tol", "rel_tol", "fd_step", "fd_step_second", "mass_tail",
                     "shift_step_fraction", "spectral_tail_tol",
                     "k1_window_scale", "k2_xi_min_scale", "fiber_circumference"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be > 0")

        if self.max_evals < 1:
            errors.append("max_evals must be >= 1")

        if self.prescan_points < 3:
            errors.append("prescan_points must be >= 3")

        if self.max_shift_steps < 1:
            errors.append("max_shift_steps must be >= 1")

        if self.mesh_n_t < 16 or self.mesh_n_fiber < 8:
            errors.append("mesh_n_t must be >= 16 and mesh_n_fiber >= 8")

        if self.threads < 0:
            errors.append("threads must be >= 0")

        # 验证日志级别
        if self.log_level not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            errors.append(f"Invalid log_level: {self.log_level}")

        return errors


class ConfigManager:
    """
    配置管理器

    单例模式,全局唯一配置实例

    职责:
    - 加载配置 (默认 -> 用户 -> 环境变量)
    - 配置验证
    - 运行期覆盖 (命令行参数)
    """

    _instance: Optional['ConfigManager'] = None
    _lock = threading.Lock()

    # 支持的环境变量映射
    ENV_MAPPINGS = {
        "ISOPROFILE_THREADS": ("threads", int),
        "ISOPROFILE_LOG_LEVEL": ("log_level", str),
        "ISOPROFILE_OUTPUT_DIR": ("output_dir", str),
        "ISOPROFILE_ABS_TOL": ("abs_tol", float),
        "ISOPROFILE_REL_TOL": ("rel_tol", float),
    }

    def __new__(cls, *args, **kwargs):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self, config_dir: Optional[str] = None):
        # 避免重复初始化
        if hasattr(self, '_initialized'):
            return

        self._initialized = True

        # 配置目录
        if config_dir is None:
            from backend.path_manager import PathManager
            config_dir = PathManager().get_config_path()

        self.config_dir = Path(config_dir)

        # 配置文件路径
        self.default_config_file = self.config_dir / "config.default.yaml"
        self.user_config_file = self.config_dir / "config.yaml"

        self._config: Optional[AppConfig] = None
        self._config_lock = threading.RLock()

        self._load_config()

    @classmethod
    def reset_instance(cls):
        """丢弃单例 (测试用)"""
        global _config_manager
        with cls._lock:
            cls._instance = None
            _config_manager = None

    def _load_config(self):
        """加载配置"""
        logger.debug("[ConfigManager] Loading configuration...")

        # 1. 加载默认配置
        default_config = self._load_yaml(self.default_config_file, "default")

        # 2. 加载用户配置(如果存在)
        user_config = self._load_yaml(self.user_config_file, "user")

        # 3. 合并配置(用户配置覆盖默认配置)
        merged_dict = {**AppConfig().to_dict(), **default_config, **user_config}

        # 4. 应用环境变量覆盖
        merged_dict.update(self._load_env_config())

        # 5. 创建配置对象
        config = AppConfig.from_dict(merged_dict)

        # 6. 验证配置
        errors = config.validate()
        if errors:
            from backend.error_handler import ConfigError
            raise ConfigError("配置验证失败", details="; ".join(errors),
                              recovery_hint=f"检查 {self.user_config_file} 或 ISOPROFILE_* 环境变量")

        with self._config_lock:
            self._config = config
        logger.debug("[ConfigManager] Configuration loaded successfully")

    @staticmethod
    def _load_yaml(path: Path, label: str) -> Dict[str, Any]:
        """读取一个YAML配置文件, 不存在时返回空字典"""
        if not path.exists():
            return {}
        try:
            with open(path, 'r', encoding='utf-8') as f:
                config = yaml.safe_load(f)
            logger.debug(f"[ConfigManager] Loaded {label} config from {path}")
            return config or {}
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"[ConfigManager] Failed to load {label} config: {e}")
            return {}

    def _load_env_config(self) -> Dict[str, Any]:
        """加载环境变量配置"""
        env_config = {}
        for env_var, (config_key, caster) in self.ENV_MAPPINGS.items():
            value = os.environ.get(env_var)
            if value is None or value == "":
                continue
            try:
                env_config[config_key] = caster(value)
            except ValueError:
                logger.warning(f"[ConfigManager] Ignoring malformed {env_var}={value!r}")
                continue
            logger.debug(f"[ConfigManager] Env override: {config_key}={value}")
        return env_config

    # ==================== 配置访问接口 ====================

    def get_config(self) -> AppConfig:
        """获取当前配置"""
        with self._config_lock:
            return self._config

    def get(self, key: str, default: Any = None) -> Any:
        """获取配置项"""
        with self._config_lock:
            if self._config is None:
                return default
            return getattr(self._config, key, default)

    def update(self, updates: Dict[str, Any]) -> List[str]:
        """
        批量更新配置 (命令行覆盖)

        Returns:
            List[str]: 发生变化的键
        """
        from backend.error_handler import ConfigError

        with self._config_lock:
            candidate = AppConfig.from_dict({**self._config.to_dict(), **updates})
            unknown = sorted(set(updates) - set(candidate.to_dict()))
            if unknown:
                raise ConfigError(f"未知配置项: {', '.join(unknown)}")
            errors = candidate.validate()
            if errors:
                raise ConfigError("配置验证失败", details="; ".join(errors))

            old = self._config.to_dict()
            self._config = candidate
            changed = [k for k, v in candidate.to_dict().items() if old[k] != v]

        if changed:
            logger.debug(f"[ConfigManager] Config updated: {changed}")
        return changed


# ==================== 全局配置实例 ====================

_config_manager: Optional[ConfigManager] = None


def get_config_manager() -> ConfigManager:
    """获取全局配置管理器实例"""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def get_config() -> AppConfig:
    """便捷函数: 获取当前配置"""
    return get_config_manager().get_config()
