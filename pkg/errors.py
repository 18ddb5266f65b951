# -*- coding: utf-8 -*-


class TeleportError(RuntimeError):
    """所有模拟器错误的基类，exit_code 供命令行入口转换为退出码"""

    exit_code = 1

    def __init__(self, msg):
        self.msgs = msg

    def __str__(self):
        return self.msgs


class DomainError(TeleportError, ValueError):
    """参数超出定义域：光子数越界、q 越界、态未归一化、截断维度不一致等"""

    exit_code = 2


class ValidationError(TeleportError, ValueError):
    """运行配置或命令行参数校验失败"""

    exit_code = 2


class CutoffTooSmallError(DomainError):
    """截断维度过小，态的泄漏超过允许范围"""

    exit_code = 2


class ConvergenceError(TeleportError):
    """数值积分未收敛（边界质量过大）或测量基完备性检查失败"""

    exit_code = 3


class UnderflowError(TeleportError):
    """测量概率 P(β) 低于下溢阈值"""

    exit_code = 3


class SamplerError(TeleportError):
    """拒绝采样失败：超过最大拒绝次数或接受率大于 1"""

    exit_code = 4

