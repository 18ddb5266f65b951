"""
运行配置
扁平 JSON 文件与命令行参数共用同一组键，命令行参数覆盖文件中的值
"""

import hashlib
import json
import logging
import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError as PydanticValidationError, field_validator, model_validator

from config import (
    DEFAULT_CUTOFF,
    DEFAULT_POINTS_PER_AXIS,
    DEFAULT_Q,
    DEFAULT_SEED,
    DEFAULT_SHOTS,
    LEAKAGE_TOLERANCE,
    MAX_REJECTIONS_PER_DRAW,
)
from errors import CutoffTooSmallError, TeleportError, ValidationError
from fock_core import (
    FockVector,
    cat_state,
    coherent_leakage,
    coherent_state,
    number_state,
    squeezed_vacuum,
)
from channel import ChannelParams, default_grid
from quad import QuadGrid, make_grid
from sampler import SamplerConfig

logger = logging.getLogger("run_config")

StateKind = Literal["vacuum", "number", "coherent", "cat", "squeezed"]
BasisName = Literal["homodyne-x", "homodyne-y", "eight-port", "number"]

# 不影响输出内容的键，不参与配置哈希
HASH_EXCLUDED_KEYS = {"out", "workers"}


class RunConfig(BaseModel):
    """一次运行的全部参数"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    # 输入态
    state: StateKind = "coherent"
    n: int = 0
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    sign: int = 1
    r: float = 0.0

    # 信道
    q: float = DEFAULT_Q
    cutoff: int = DEFAULT_CUTOFF
    allow_high_q: bool = False

    # 积分网格，extent 为空时使用默认半宽
    extent: Optional[float] = None
    points: int = DEFAULT_POINTS_PER_AXIS

    # 采样
    seed: int = DEFAULT_SEED
    shots: int = DEFAULT_SHOTS
    workers: int = 1
    store_amplitudes: bool = False

    # 输出
    out: Optional[str] = None
    format: Literal["csv", "json"] = "csv"

    # 子命令参数
    basis: BasisName = "homodyne-x"
    q_list: List[float] = [0.0, 0.25, 0.5, 0.75]
    ray_angle: float = 0.0
    ray_max: float = 3.0
    ray_points: int = 31

    @field_validator("alpha_re", "alpha_im", "r", "ray_angle", "ray_max")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("必须是有限实数")
        return value

    @field_validator("cutoff")
    @classmethod
    def _cutoff(cls, value: int) -> int:
        if value < 1:
            raise ValueError("cutoff 必须 ≥ 1")
        return value

    @field_validator("sign")
    @classmethod
    def _sign(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError("sign 只能为 1 或 -1")
        return value

    @field_validator("points")
    @classmethod
    def _points(cls, value: int) -> int:
        if value < 3 or value % 2 == 0:
            raise ValueError("每轴节点数必须是 ≥3 的奇数")
        return value

    @field_validator("extent")
    @classmethod
    def _extent(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not (math.isfinite(value) and value > 0):
            raise ValueError("网格半宽必须为正")
        return value

    @field_validator("seed")
    @classmethod
    def _seed(cls, value: int) -> int:
        if not 0 <= value < 2 ** 64:
            raise ValueError("seed 必须在 [0, 2^64) 内")
        return value

    @field_validator("shots", "workers", "ray_points")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("必须 ≥ 1")
        return value

    @field_validator("q_list")
    @classmethod
    def _q_list(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("q_list 不能为空")
        return value

    @model_validator(mode="after")
    def _downstream(self) -> "RunConfig":
        # 下游模块的定义域检查在解析阶段执行
        if self.state == "number" and not 0 <= self.n <= self.cutoff:
            raise ValueError(f"光子数 n={self.n} 超出 [0, {self.cutoff}]")
        if self.state == "squeezed" and self.r < 0:
            raise ValueError(f"压缩参数 r 必须 ≥ 0: {self.r}")
        try:
            self.channel_params()
            for q in self.q_list:
                ChannelParams(q, self.cutoff, self.allow_high_q)
            self.build_state()
        except TeleportError as e:
            raise ValueError(str(e)) from e
        return self

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    def channel_params(self, q: Optional[float] = None) -> ChannelParams:
        return ChannelParams(self.q if q is None else q, self.cutoff, self.allow_high_q)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(self.seed, MAX_REJECTIONS_PER_DRAW, self.store_amplitudes, self.workers)

    def build_state(self) -> FockVector:
        """按 state 构造归一化输入态"""
        if self.state == "vacuum":
            return number_state(0, self.cutoff)
        if self.state == "number":
            return number_state(self.n, self.cutoff)
        if self.state == "coherent":
            leakage = coherent_leakage(self.alpha, self.cutoff)
            if leakage > LEAKAGE_TOLERANCE:
                raise CutoffTooSmallError(f"cutoff={self.cutoff} 过小，相干态 α={self.alpha} 的泄漏 {leakage:.3g}")
            if leakage > 1e-12:
                logger.warning(f"相干态 α={self.alpha} 在 cutoff={self.cutoff} 下泄漏 {leakage:.3g}，已重新归一化")
            return coherent_state(self.alpha, self.cutoff).normalized()
        if self.state == "cat":
            return cat_state(self.alpha, self.sign, self.cutoff)
        return squeezed_vacuum(self.r, self.cutoff)

    def beta_grid(self, psi: FockVector, params: ChannelParams, interior: int = 0) -> QuadGrid:
        """配置给定 extent 时以 0 为中心，否则使用以相干质心为中心的默认网格"""
        if self.extent is None:
            return default_grid(psi, params, self.points, interior)
        return make_grid(0j, self.extent, self.points)

    def config_hash(self) -> str:
        payload = self.model_dump(exclude=HASH_EXCLUDED_KEYS)
        canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def build(cls, **values: Any) -> "RunConfig":
        """构造配置，校验失败时抛出 ValidationError"""
        try:
            return cls(**values)
        except PydanticValidationError as e:
            details = "; ".join(
                f"{'.'.join(str(part) for part in error['loc']) or 'config'}: {error['msg']}" for error in e.errors()
            )
            raise ValidationError(f"配置校验失败: {details}") from e

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                values = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationError(f"无法读取配置文件 {path}: {e}") from e
        if not isinstance(values, dict):
            raise ValidationError(f"配置文件 {path} 必须是一个 JSON 对象")
        return cls.build(**values)

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.model_dump(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")

    def merged(self, overrides: Dict[str, Any]) -> "RunConfig":
        """用非空的覆盖值生成新配置"""
        values = self.model_dump()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return self.build(**values)
