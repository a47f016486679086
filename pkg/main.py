#!/usr/bin/env python3
"""
isoprofile - 命令行主程序入口

子命令:
    profile            模型等周轮廓 I_(K,N,D) 的 θ 网格表
    verify-appendix    有界直径轮廓严格优势证书
    needle             一维针线分析报告
    spectral           加权 Laplacian 第一非零特征值收敛表
    warped             翘曲积中半空间与混合集合的比较
    derivative-check   轮廓导数的有限差分对照
"""

import argparse
import signal
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from loguru import logger

# 添加项目根目录到路径
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from backend.error_handler import (
    ExitCode,
    IsoprofileError,
    ParameterError,
    check_startup_requirements,
    get_error_handler,
    handle_errors,
)
from cli.run_config import (
    DEFAULT_THETAS,
    Command,
    RunConfig,
    parse_float_list,
    parse_intervals,
    parse_theta_grid,
)

# 各命令的默认 θ 网格
COMMAND_THETAS = {
    Command.PROFILE: DEFAULT_THETAS,
    Command.VERIFY_APPENDIX: DEFAULT_THETAS,
    Command.NEEDLE: "0.1:0.9:0.1",
    Command.SPECTRAL: "0.5",
    Command.WARPED: "0.5",
    Command.DERIVATIVE_CHECK: "0.2,0.5,0.8",
}


# ==================== 日志配置 ====================

def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    """
    配置日志系统

    控制台处理器写到标准错误; 文件处理器按天轮转
    """
    from backend.path_manager import PathManager

    if log_file is None:
        log_file = str(Path(PathManager().get_log_path()) / "isoprofile.log")

    # 移除默认处理器
    logger.remove()

    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
        level=level,
        colorize=True
    )

    if log_file:
        logger.add(
            log_file,
            rotation="1 day",
            retention="7 days",
            compression="zip",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            level="DEBUG"
        )

    logger.debug(f"Log file: {log_file or '(disabled)'}")


# ==================== 启动检查 ====================

def perform_startup_checks() -> bool:
    """执行启动检查, 失败时把原因写到标准错误"""
    errors = check_startup_requirements()
    if errors:
        logger.error("启动检查失败!")
        for error in errors:
            logger.error(f"  - {error}")
        return False
    logger.debug("启动检查通过")
    return True


# ==================== 信号处理 ====================

def setup_signal_handlers():
    """SIGINT / SIGTERM 统一转为 KeyboardInterrupt, 由 main 映射为退出码 130"""
    def signal_handler(signum, frame):
        logger.info(f"收到信号 {signum}，准备退出...")
        raise KeyboardInterrupt

    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)


# ==================== 参数解析 ====================

def build_parser() -> argparse.ArgumentParser:
    """构造命令行解析器"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", dest="output_path", help="输出文件 (缺省写到标准输出)")
    common.add_argument("--format", choices=["csv", "json"], help="输出格式 (缺省按后缀/命令推断)")
    common.add_argument("--thetas", help="θ 网格: 'a:b:step' 或逗号列表")
    common.add_argument("--abs-tol", type=float, help="绝对容差覆盖")
    common.add_argument("--rel-tol", type=float, help="相对容差覆盖")
    common.add_argument("--threads", type=int, help="工作线程数 (也可用 ISOPROFILE_THREADS)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")
    common.add_argument("--log-file", help="日志文件 (空字符串关闭文件日志)")
    common.add_argument("--quiet", action="store_true", help="不打印控制台摘要")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--K", type=float, default=1.0, help="曲率下界 K > 0")
    model.add_argument("--N", default="inf", help="有效维数: 'inf' 或负数")
    model.add_argument("--D", default="inf", help="直径: 'inf' 或正数")

    space = argparse.ArgumentParser(add_help=False)
    space.add_argument("--density", default="cosh",
                       choices=["gaussian", "cosh", "exp", "poly", "table"], help="一维密度")
    space.add_argument("--gamma", type=float, help="cosh 模型的平移 γ")
    space.add_argument("--k", type=float, help="cosh 模型的尺度 k")
    space.add_argument("--shift", type=float, help="高斯平移")
    space.add_argument("--poly", help="ψ 的多项式系数 (升幂, 逗号分隔)")
    space.add_argument("--trig", help="正弦项 'A:omega:phi;...'")
    space.add_argument("--table", help="表格势函数文件")

    parser = argparse.ArgumentParser(prog="isoprofile",
                                     description="Model isoperimetric profiles under CD(K,N), N = inf or N < 0")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(Command.PROFILE.value, parents=[common, model], help="模型轮廓表")

    appendix = sub.add_parser(Command.VERIFY_APPENDIX.value, parents=[common],
                              help="有界直径轮廓严格优势证书")
    appendix.add_argument("--K", dest="K_grid", default="1", help="K 列表")
    appendix.add_argument("--N", dest="N_grid", default="-2,-5,-10", help="N 列表 (N < 0)")
    appendix.add_argument("--D", dest="D_grid", default="0.5,1,2,5", help="D 列表 (有限)")
    appendix.add_argument("--gaussian", action="store_true", help="截断高斯版本")

    needle = sub.add_parser(Command.NEEDLE.value, parents=[common, model, space], help="一维针线分析")
    needle.add_argument("--rigidity", action="store_true", help="刚性检测")
    needle.add_argument("--brute-force", action="store_true", help="穷举对照")
    needle.add_argument("--brute-grid", type=int, help="穷举网格点数 (16-400)")
    needle.add_argument("--reduce", dest="reduce_set", help="平移约化的初始集合 'lo:hi,lo:hi'")

    spectral = sub.add_parser(Command.SPECTRAL.value, parents=[common, model, space],
                              help="第一非零特征值")
    spectral.add_argument("--n", dest="n_values", help="网格点数列表, 逗号分隔")
    spectral.add_argument("--L", type=float, help="截断半宽 (缺省按尾部质量自动选择)")

    warped = sub.add_parser(Command.WARPED.value, parents=[common, model], help="翘曲积模型")
    warped.add_argument("--theta", dest="thetas_alias", help="单个 θ (等价于 --thetas)")
    warped.add_argument("--q1", type=float, help="Q1 的弧长比例")
    warped.add_argument("--q1-start", type=float, help="Q1 的起点 (周长比例)")
    warped.add_argument("--b", type=float, help="超出量下界中的 b < min(r, r̄)")
    warped.add_argument("--eps", type=float, help="网格膨胀半径")
    warped.add_argument("--grid", action="store_true", help="同时在网格图上计算 ε-边界")
    warped.add_argument("--n-t", type=int, help="t 方向节点数")
    warped.add_argument("--n-fiber", type=int, help="纤维方向节点数")
    warped.add_argument("--sweep", type=int, help="额外的混合集合个数")

    derivative = sub.add_parser(Command.DERIVATIVE_CHECK.value, parents=[common, model],
                                help="轮廓导数对照")
    derivative.add_argument("--fd-tol", type=float, help="允许的绝对误差")

    return parser


def _parse_trig(text: str) -> List[List[float]]:
    terms = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        try:
            terms.append([float(p) for p in chunk.split(":")])
        except ValueError:
            raise ParameterError(f"trig term must be 'A:omega:phi', got {chunk!r}")
    return terms


def _parse_sizes(text: str) -> List[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ParameterError(f"grid sizes must be integers, got {text!r}")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """命令行参数 -> RunConfig"""
    command = Command(args.command)
    values: Dict[str, Any] = {k: v for k, v in vars(args).items()
                              if k not in ("command", "log_level", "log_file", "quiet", "thetas_alias")}
    values["command"] = command

    thetas = getattr(args, "thetas_alias", None) or args.thetas or COMMAND_THETAS[command]
    values["thetas"] = parse_theta_grid(thetas)

    if command == Command.VERIFY_APPENDIX:
        values["K_grid"] = parse_float_list(args.K_grid, "K")
        values["N_grid"] = parse_float_list(args.N_grid, "N")
        values["D_grid"] = parse_float_list(args.D_grid, "D")
        if args.gaussian:
            values["N_grid"] = []
    if getattr(args, "poly", None):
        values["poly"] = parse_float_list(args.poly, "poly")
    if getattr(args, "trig", None):
        values["trig"] = _parse_trig(args.trig)
    if getattr(args, "reduce_set", None):
        values["reduce_set"] = parse_intervals(args.reduce_set)
    if getattr(args, "n_values", None):
        values["n_values"] = _parse_sizes(args.n_values)

    return RunConfig.build(**values)


# ==================== 主函数 ====================

def apply_config_overrides(args: argparse.Namespace) -> List[str]:
    """把命令行中的通用选项写回全局配置, 返回发生变化的键"""
    from backend.config_manager import get_config_manager

    overrides = {
        key: value
        for key, value in (("log_level", args.log_level), ("log_file", args.log_file))
        if value is not None
    }
    if not overrides:
        return []
    return get_config_manager().update(overrides)


def run_subcommand(args: argparse.Namespace) -> int:
    """构造运行配置并执行子命令"""
    from cli.commands import run_command

    config = config_from_args(args)
    run_command(config, quiet=args.quiet)
    return ExitCode.OK


def main(argv: Optional[List[str]] = None) -> int:
    """主函数, 返回退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)

    from backend.config_manager import get_config
    handler = get_error_handler()

    try:
        apply_config_overrides(args)
        app_config = get_config()
        setup_logging(app_config.log_level, app_config.log_file)
        if not perform_startup_checks():
            return ExitCode.INVALID_INPUT
        setup_signal_handlers()

        return handle_errors(args.command)(run_subcommand)(args)

    except IsoprofileError as e:
        return handler.handle_exception(e, args.command)
    except KeyboardInterrupt as e:
        return handler.handle_exception(e, args.command)
    except Exception as e:
        logger.exception(f"未预期的异常: {e}")
        return handler.handle_exception(e, args.command)
    finally:
        stats = handler.get_error_statistics()
        if stats:
            logger.debug(f"[Main] Error statistics: {stats}")


if __name__ == "__main__":
    sys.exit(main())
