import importlib
import inspect
import logging
import pkgutil
from typing import Dict, List, Optional

from .base_command import BaseCommand

logger = logging.getLogger("command_manager")


class CommandManager:
    """
    子命令管理器，负责发现和管理所有子命令
    """

    def __init__(self):
        self.commands: Dict[str, BaseCommand] = {}
        self.logger = logger

    def load_commands(self, package_name: str = "commands") -> None:
        """
        从指定包中加载所有子命令

        Args:
            package_name: 子命令包名称
        """
        self.logger.debug(f"开始加载子命令，包名: {package_name}")
        package = importlib.import_module(package_name)

        # 遍历包中的所有模块
        for _, module_name, is_pkg in pkgutil.iter_modules(package.__path__):
            if is_pkg or module_name in ["base_command", "command_manager"]:
                continue
            module_path = f"{package_name}.{module_name}"
            module = importlib.import_module(module_path)

            found = False
            for _, obj in inspect.getmembers(module, inspect.isclass):
                if issubclass(obj, BaseCommand) and obj is not BaseCommand and obj.__module__ == module_path:
                    self.register_command(obj())
                    found = True
            if not found:
                self.logger.debug(f"模块 {module_name} 中未找到子命令类")

        self.logger.debug(f"子命令加载完成，共加载 {len(self.commands)} 个子命令")

    def register_command(self, command: BaseCommand) -> None:
        """
        注册一个子命令

        Args:
            command: 子命令实例
        """
        if command.name in self.commands:
            self.logger.warning(f"子命令 {command.name} 已存在，将被覆盖")
        self.commands[command.name] = command
        self.logger.debug(f"注册子命令: {command.__class__.__name__}, 名称: {command.name}")

    def get_command(self, name: str) -> Optional[BaseCommand]:
        return self.commands.get(name)

    def get_all_commands(self) -> List[BaseCommand]:
        """按名称排序的全部子命令"""
        return [self.commands[name] for name in sorted(self.commands)]


# 创建全局子命令管理器实例
command_manager = CommandManager()
