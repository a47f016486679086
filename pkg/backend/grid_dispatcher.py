"""
网格调度器 - 把相互独立的网格单元分发到线程池

结果总是按输入顺序组装, 与完成顺序无关
"""

import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

import psutil
from loguru import logger

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "ISOPROFILE_THREADS"


def resolve_thread_count(requested: Optional[int] = None) -> int:
    """
    决定工作线程数

    优先级: 显式参数 > ISOPROFILE_THREADS > 配置中的 threads > 物理核数
    """
    if requested is not None and requested > 0:
        return requested

    env_value = os.environ.get(THREADS_ENV, "").strip()
    if env_value:
        try:
            value = int(env_value)
            if value > 0:
                return value
        except ValueError:
            logger.warning(f"[GridDispatcher] Ignoring malformed {THREADS_ENV}={env_value!r}")

    try:
        from backend.config_manager import get_config
        configured = get_config().threads
    except Exception:
        configured = 0
    if configured > 0:
        return configured

    return psutil.cpu_count(logical=False) or os.cpu_count() or 1


def run_grid(items: Sequence[T], func: Callable[[T], R],
             max_workers: Optional[int] = None) -> List[R]:
    """
    并行计算 func(item)

    Args:
        items: 网格单元
        func: 纯函数
        max_workers: 线程数上限 (None 时自动选择)

    Returns:
        List[R]: 与 items 一一对应的结果

    Raises:
        第一个 (按输入顺序) 失败单元的异常
    """
    items = list(items)
    if not items:
        return []

    workers = min(resolve_thread_count(max_workers), len(items))
    if workers == 1:
        return [func(item) for item in items]

    logger.debug(f"[GridDispatcher] Dispatching {len(items)} cells to {workers} workers")
    results: List[Optional[R]] = [None] * len(items)
    failures = {}

    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(func, item): index for index, item in enumerate(items)}

        for future in as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as e:
                failures[index] = e
                logger.error(f"[GridDispatcher] Cell {items[index]!r} failed: {e}")

    if failures:
        raise failures[min(failures)]
    return results
