"""
报告输出 - CSV (pandas, 17 位有效数字, LF 换行) 与 JSON (UTF-8, 键排序)

同一配置两次运行的输出逐字节相同: 报告内不写时间戳, 浮点数统一格式化.
"""

import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from backend.error_handler import ParameterError
from backend.path_manager import PathManager
from cli.run_config import OutputFormat


@dataclass
class Report:
    """
    一次命令的结果

    Attributes:
        rows: CSV 的行 (列顺序由 columns 给出)
        document: JSON 文档
        passed: 是否所有请求的证书都成立
        summary: 控制台摘要 (标签 -> 值)
    """
    rows: List[Dict[str, Any]]
    columns: Sequence[str]
    document: Dict[str, Any]
    passed: bool = True
    summary: Dict[str, Any] = field(default_factory=dict)


def to_json_ready(value: Any) -> Any:
    """numpy 标量/数组、无穷与 NaN 转为 JSON 可表示的值"""
    if isinstance(value, dict):
        return {str(k): to_json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_json_ready(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def render_csv(report: Report) -> str:
    frame = pd.DataFrame(report.rows, columns=list(report.columns))
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
    return buffer.getvalue()


def render_json(report: Report) -> str:
    return json.dumps(to_json_ready(report.document), sort_keys=True, ensure_ascii=False,
                      indent=2, allow_nan=False) + "\n"


def write_report(report: Report, fmt: OutputFormat, output_path: Optional[str] = None,
                 output_dir: Optional[str] = None) -> Optional[str]:
    """
    写出报告

    Args:
        output_path: 目标文件; None 时写到标准输出
        output_dir: 相对路径的基准目录

    Returns:
        实际写入的文件路径 (标准输出时为 None)
    """
    if fmt == OutputFormat.CSV:
        if not report.columns:
            raise ParameterError("this command has no tabular output; use --format json")
        text = render_csv(report)
    else:
        text = render_json(report)

    if output_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return None

    path = PathManager().resolve_output_file(output_path, output_dir)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info(f"[ReportWriter] Wrote {fmt.value.upper()} report to {path}")
    return path
