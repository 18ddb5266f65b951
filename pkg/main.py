import argparse
import json
import logging
import logging.config
import os
import sys
from typing import List, Optional

from config import OUTPUT_DIR
from errors import TeleportError
from report_writer import ReportWriter, to_jsonable
from run_config import RunConfig
from commands.command_manager import command_manager

LOGGING_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "logging.ini")

logger = logging.getLogger("main")


def setup_logging(debug: bool = False) -> None:
    """从 logging.ini 初始化日志，日志只写到 stderr"""
    # 确保彩色日志格式化器模块可用
    try:
        import color_formatter  # noqa: F401
        import colorama
        colorama.init(autoreset=True)
        has_color = True
    except ImportError:
        has_color = False

    if has_color and os.path.exists(LOGGING_CONFIG):
        logging.config.fileConfig(LOGGING_CONFIG, disable_existing_loggers=False)
    else:
        logging.basicConfig(
            level=logging.INFO,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
            stream=sys.stderr,
        )
        logging.warning("logging.ini 不可用，使用默认日志配置")

    if debug:
        logging.getLogger().setLevel(logging.DEBUG)
        for handler in logging.getLogger().handlers:
            handler.setLevel(logging.DEBUG)
        for name in list(logging.root.manager.loggerDict):
            logging.getLogger(name).setLevel(logging.DEBUG)


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """所有子命令共用的参数，默认值为 None 表示不覆盖配置文件"""
    parser.add_argument("--config", help="扁平 JSON 配置文件")
    parser.add_argument("--seed", type=int, help="随机数种子 (64 位无符号整数)")
    parser.add_argument("--q", type=float, help="纠缠参数 0 ≤ q < 1")
    parser.add_argument("--cutoff", type=int, help="截断光子数")
    parser.add_argument("--out", help=f"输出表格路径，默认 {OUTPUT_DIR}/<子命令>.<格式>")
    parser.add_argument("--format", choices=["csv", "json"], help="输出格式")
    parser.add_argument("--state", choices=["vacuum", "number", "coherent", "cat", "squeezed"], help="输入态类型")
    parser.add_argument("--n", type=int, help="光子数态的 n")
    parser.add_argument("--alpha-re", dest="alpha_re", type=float, help="相干/猫态振幅实部")
    parser.add_argument("--alpha-im", dest="alpha_im", type=float, help="相干/猫态振幅虚部")
    parser.add_argument("--sign", type=int, choices=[1, -1], help="猫态符号")
    parser.add_argument("--r", type=float, help="压缩参数")
    parser.add_argument("--extent", type=float, help="积分网格半宽")
    parser.add_argument("--points", type=int, help="每轴网格点数 (奇数)")
    parser.add_argument("--shots", type=int, help="采样次数")
    parser.add_argument("--workers", type=int, help="并行线程数，不影响输出内容")
    parser.add_argument("--allow-high-q", dest="allow_high_q", action="store_true", default=None,
                        help="允许 q > 0.95")
    parser.add_argument("-d", "--debug", action="store_true", help="输出调试日志")


def build_parser() -> argparse.ArgumentParser:
    if not command_manager.commands:
        command_manager.load_commands("commands")
    parser = argparse.ArgumentParser(description="有限纠缠连续变量隐形传态模拟器")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in command_manager.get_all_commands():
        subparser = subparsers.add_parser(command.name, help=command.description, description=command.description)
        add_common_arguments(subparser)
        command.add_arguments(subparser)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """配置文件的值被显式给出的命令行参数覆盖"""
    config = RunConfig.from_file(args.config) if args.config else RunConfig.build()
    overrides = {key: getattr(args, key) for key in RunConfig.model_fields if hasattr(args, key)}
    return config.merged(overrides)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.debug)

    try:
        config = load_config(args)
        command = command_manager.get_command(args.command)
        writer = ReportWriter(config.out, command.name, config.format)
        report = command.run(config, writer)
    except TeleportError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"未预期的错误: {e}")
        return 1

    print(json.dumps(to_jsonable(report.summary), ensure_ascii=False, indent=2, sort_keys=True))
    for path in report.paths:
        logger.info(f"输出文件: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
