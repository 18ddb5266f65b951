"""
复平面上的确定性二维数值积分
所有 ∫d²β 与 ∫d²α 都通过这里的复合梯形张量网格完成
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from config import BOUNDARY_MASS_TOLERANCE, DEFAULT_POINTS_PER_AXIS
from errors import ConvergenceError, DomainError
from fock_core import ComplexPoint, PointLike, as_complex

logger = logging.getLogger("quad")

# 叶子块大小固定，保证规约顺序与并行方式无关
BLOCK_SIZE = 256


@dataclass(frozen=True, eq=False)
class QuadGrid:
    """以 center 为中心、半宽 extent、每轴 points_per_axis 个节点的梯形网格"""
    center: ComplexPoint
    extent: float
    points_per_axis: int
    nodes: np.ndarray
    weights: np.ndarray
    boundary: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / (self.points_per_axis - 1)

    def describe(self) -> dict:
        return {
            "center_re": self.center.re,
            "center_im": self.center.im,
            "extent": self.extent,
            "points_per_axis": self.points_per_axis,
        }


@dataclass(frozen=True)
class QuadResult:
    """积分值与边界质量诊断"""
    value: Union[complex, np.ndarray]
    boundary_mass: float
    converged: bool

    def require_converged(self, what: str = "积分") -> "QuadResult":
        if not self.converged:
            raise ConvergenceError(f"{what}未收敛: 边界质量 {self.boundary_mass:.3g} > {BOUNDARY_MASS_TOLERANCE}")
        return self


def make_grid(center: PointLike, extent: float, points_per_axis: int = DEFAULT_POINTS_PER_AXIS) -> QuadGrid:
    """
    构造复合梯形张量网格

    Args:
        center: 网格中心
        extent: 半宽 L，节点覆盖 [c-L, c+L]²
        points_per_axis: 每轴节点数 M，必须为 ≥3 的奇数

    Returns:
        QuadGrid，权重之和为 (2L)²
    """
    center = as_complex(center)
    if not (math.isfinite(extent) and extent > 0):
        raise DomainError(f"网格半宽必须为正: {extent}")
    if int(points_per_axis) != points_per_axis or points_per_axis < 3 or points_per_axis % 2 == 0:
        raise DomainError(f"每轴节点数必须是 ≥3 的奇数: {points_per_axis}")
    m = int(points_per_axis)
    offsets = np.linspace(-extent, extent, m)
    h = 2.0 * extent / (m - 1)
    axis_weights = np.full(m, h)
    axis_weights[0] = axis_weights[-1] = h / 2.0

    # 规范顺序: 虚部为外层循环、实部为内层循环
    im_offsets, re_offsets = np.meshgrid(offsets, offsets, indexing="ij")
    nodes = (center.real + re_offsets) + 1j * (center.imag + im_offsets)
    weights = np.outer(axis_weights, axis_weights)
    boundary = np.zeros((m, m), dtype=bool)
    boundary[0, :] = boundary[-1, :] = boundary[:, 0] = boundary[:, -1] = True

    nodes = nodes.reshape(-1)
    weights = weights.reshape(-1)
    boundary = boundary.reshape(-1)
    for array in (nodes, weights, boundary):
        array.setflags(write=False)
    return QuadGrid(ComplexPoint.from_complex(center), float(extent), m, nodes, weights, boundary)


def default_extent(q: float, center: PointLike = 0j, spread: float = 0.0) -> float:
    """
    默认网格半宽 L = |c| + 4/√(1-q²) + 2 + 2·spread

    spread 为输入态相对相干质心的额外展宽 (相干态为 0)，
    对算符值积分也用于覆盖内部子空间的最高能级。
    """
    return abs(as_complex(center)) + 4.0 / math.sqrt(1.0 - q * q) + 2.0 + 2.0 * spread


def _pairwise_sum(values: np.ndarray) -> np.ndarray:
    """沿第 0 轴的成对求和"""
    count = values.shape[0]
    if count <= 8:
        total = values[0].copy()
        for i in range(1, count):
            total = total + values[i]
        return total
    half = count // 2
    return _pairwise_sum(values[:half]) + _pairwise_sum(values[half:])


def _node_magnitude(values: np.ndarray, interior: Optional[int]) -> np.ndarray:
    if values.ndim == 1:
        return np.abs(values)
    if interior is not None:
        index = (slice(None),) + tuple(slice(0, interior + 1) for _ in range(values.ndim - 1))
        values = values[index]
    return np.abs(values).reshape(values.shape[0], -1).sum(axis=1)


def integrate(
    f: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    grid: QuadGrid,
    interior: Optional[int] = None,
) -> QuadResult:
    """
    计算 Σ wᵢ f(βᵢ)，采用固定块大小的成对求和

    Args:
        f: 按节点排列的值 (第 0 轴为节点) 或可调用对象，接收一段节点返回对应值
        grid: 积分网格
        interior: 向量/矩阵值被积函数只在下标 ≤ interior 的子块上统计边界质量

    Returns:
        QuadResult(value, boundary_mass, converged)
    """
    block_sums = []
    boundary_total = 0.0
    magnitude_total = 0.0
    for start in range(0, grid.size, BLOCK_SIZE):
        stop = min(start + BLOCK_SIZE, grid.size)
        if callable(f):
            values = np.asarray(f(grid.nodes[start:stop]))
        else:
            values = np.asarray(f[start:stop])
        if values.shape[0] != stop - start:
            raise DomainError(f"被积函数值的数量 {values.shape[0]} 与节点数 {stop - start} 不一致")
        weights = grid.weights[start:stop].reshape((-1,) + (1,) * (values.ndim - 1))
        block_sums.append(_pairwise_sum(weights * values))
        magnitude = _node_magnitude(values, interior)
        boundary_total += float(np.sum(magnitude[grid.boundary[start:stop]]))
        magnitude_total += float(np.sum(magnitude))

    value = _pairwise_sum(np.stack(block_sums))
    boundary_mass = boundary_total / magnitude_total if magnitude_total > 0 else 0.0
    converged = boundary_mass <= BOUNDARY_MASS_TOLERANCE
    if not converged:
        logger.warning(f"边界质量 {boundary_mass:.3g} 超过阈值 {BOUNDARY_MASS_TOLERANCE}，网格可能过小")
    if np.ndim(value) == 0:
        value = value.item()
    return QuadResult(value, boundary_mass, converged)
