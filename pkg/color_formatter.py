import logging
import os
import sys

from colorama import Fore, Style


class ColorFormatter(logging.Formatter):
    """
    按日志级别与模块着色的格式化器

    stderr 不是终端或设置了 NO_COLOR 时输出纯文本
    """

    LEVEL_COLORS = {
        logging.DEBUG: Fore.CYAN,
        logging.INFO: Fore.GREEN,
        logging.WARNING: Fore.YELLOW,
        logging.ERROR: Fore.RED,
        logging.CRITICAL: Fore.RED + Style.BRIGHT,
    }

    # 按 logger 名称前缀匹配
    MODULE_COLORS = (
        ("channel", Fore.MAGENTA),
        ("sampler", Fore.BLUE),
        ("verify", Fore.LIGHTMAGENTA_EX),
        ("quad", Fore.LIGHTBLUE_EX),
        ("fock_core", Fore.LIGHTCYAN_EX),
        ("command", Fore.LIGHTGREEN_EX),
        ("run_config", Fore.LIGHTYELLOW_EX),
    )

    def __init__(self, fmt=None, datefmt=None, style="%", use_color=None):
        super().__init__(fmt, datefmt, style)
        if use_color is None:
            use_color = "NO_COLOR" not in os.environ and sys.stderr.isatty()
        self.use_color = use_color

    def module_color(self, name: str) -> str:
        for prefix, color in self.MODULE_COLORS:
            if name == prefix or name.startswith(prefix + "."):
                return color
        return ""

    def format(self, record: logging.LogRecord) -> str:
        message = super().format(record)
        if not self.use_color:
            return message

        level_color = self.LEVEL_COLORS.get(record.levelno, "")
        module_color = self.module_color(record.name) or level_color
        # 时间 - 模块 - 级别 - 消息
        parts = message.split(" - ", 3)
        if len(parts) != 4:
            return f"{level_color}{message}{Style.RESET_ALL}"
        timestamp, name, level, text = parts
        return (
            f"{timestamp} - {module_color}{name}{Style.RESET_ALL}"
            f" - {level_color}{level}{Style.RESET_ALL} - {text}"
        )
