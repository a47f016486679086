"""
测试公共夹具

- 每个测试前后重置 ConfigManager 单例并清除 ISOPROFILE_* 环境变量
- 常用模型参数与一维空间 (模块级缓存)
"""

import os
import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from backend.config_manager import ConfigManager
from backend.model_params import ModelParams
from backend.weighted_line import cosh_model_line, gaussian_line


@pytest.fixture(autouse=True)
def clean_config(monkeypatch):
    """隔离全局配置"""
    for key in list(os.environ):
        if key.startswith("ISOPROFILE_"):
            monkeypatch.delenv(key, raising=False)
    ConfigManager.reset_instance()
    yield
    ConfigManager.reset_instance()


@pytest.fixture
def output_dir(tmp_path):
    """报告输出目录"""
    path = tmp_path / "output"
    path.mkdir()
    return path


@pytest.fixture(scope="module")
def neg_params():
    return ModelParams(1.0, -2.0)


@pytest.fixture(scope="module")
def cosh_line(neg_params):
    return cosh_model_line(neg_params)


@pytest.fixture(scope="module")
def unit_gaussian():
    return gaussian_line(1.0)
