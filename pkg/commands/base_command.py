from abc import ABC, abstractmethod
import argparse
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

from report_writer import ReportWriter
from run_config import RunConfig

logger = logging.getLogger("base_command")


@dataclass
class CommandReport:
    """子命令的运行结果：摘要与写出的文件"""
    command: str
    summary: Dict[str, Any]
    paths: List[str] = field(default_factory=list)


class BaseCommand(ABC):
    """
    子命令基类，所有子命令都应该继承这个类
    """

    def __init__(self, name: str, description: str):
        """
        初始化子命令

        Args:
            name: 子命令名称 (命令行中使用)
            description: 子命令的描述信息
        """
        self.name = name
        self.description = description
        self.logger = logging.getLogger(f"command.{name}")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """注册子命令专用的参数，默认没有"""

    @abstractmethod
    def run(self, config: RunConfig, writer: ReportWriter) -> CommandReport:
        """
        执行子命令的核心方法，需要子类实现

        Args:
            config: 已校验的运行配置
            writer: 输出表格与摘要的写入器

        Returns:
            CommandReport
        """

    def help(self) -> str:
        return f"{self.name} - {self.description}"
