"""
命令行前端 - 运行配置、报告输出与各子命令
"""

from cli.run_config import Command, OutputFormat, RunConfig, parse_float_list, parse_theta_grid

__all__ = [
    "Command",
    "OutputFormat",
    "RunConfig",
    "parse_float_list",
    "parse_theta_grid",
]
