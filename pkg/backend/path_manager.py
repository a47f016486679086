"""
路径管理器 - 统一处理所有路径相关逻辑
"""

import os
from typing import Optional


class PathManager:
    """路径管理器，统一处理所有路径相关逻辑

    提供统一的路径管理接口，支持：
    - 配置目录 (data/config/)
    - 日志目录 (data/logs/)
    - 结果输出目录 (data/output/)
    """

    def __init__(self, project_root: Optional[str] = None):
        self.project_root = project_root or self._get_project_root()

    def _get_project_root(self) -> str:
        """获取项目根目录路径 (同时包含 backend/ 与 data/ 的最近祖先目录)"""
        def get_root_dir(start_dir):
            current_dir = os.path.abspath(start_dir)
            if (os.path.isdir(os.path.join(current_dir, "backend"))
                    and os.path.isdir(os.path.join(current_dir, "data"))):
                return current_dir

            parent_dir = os.path.dirname(current_dir)
            if parent_dir == current_dir:
                return None
            return get_root_dir(parent_dir)

        # 优先从本文件位置向上查找，其次从工作目录
        result = get_root_dir(os.path.dirname(__file__)) or get_root_dir(os.getcwd())
        if result is None:
            raise FileNotFoundError("无法找到 isoprofile 项目根目录")
        return result

    # ==================== 基础路径方法 ====================

    def get_root_begin_path(self, *path_parts) -> str:
        """获取根目录起始的路径"""
        return os.path.join(self.project_root, *path_parts)

    def ensure_directory(self, directory_path: str) -> str:
        """确保目录存在"""
        os.makedirs(directory_path, exist_ok=True)
        return directory_path

    def ensure_file_directory(self, file_path: str) -> str:
        """确保文件所在目录存在"""
        directory = os.path.dirname(os.path.abspath(file_path))
        return self.ensure_directory(directory)

    # ==================== 应用数据路径 ====================

    def get_app_data_path(self, *path_parts) -> str:
        """获取应用数据目录路径"""
        return self.get_root_begin_path("data", *path_parts)

    def get_log_path(self) -> str:
        """获取日志目录路径 (data/logs/)"""
        return self.ensure_directory(self.get_app_data_path("logs"))

    def get_config_path(self) -> str:
        """获取配置目录路径 (data/config/)"""
        return self.ensure_directory(self.get_app_data_path("config"))

    def resolve_output_file(self, output_path: str, output_dir: Optional[str] = None) -> str:
        """
        解析输出文件路径

        绝对路径原样返回; 相对路径依次相对 output_dir 或工作目录解析
        """
        if os.path.isabs(output_path):
            resolved = output_path
        elif output_dir:
            resolved = os.path.join(output_dir, output_path)
        else:
            resolved = os.path.abspath(output_path)
        self.ensure_file_directory(resolved)
        return resolved
