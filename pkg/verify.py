"""
验证测量层
零差/八端口零差测量、联合分布 P(β,V) 以及八端口零差的有效测量基
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from config import (
    BOUNDARY_MASS_TOLERANCE,
    COMPLETENESS_TOLERANCE,
    DEFAULT_POINTS_PER_AXIS,
    HOMODYNE_POINTS,
    HOMODYNE_WIDTH_SIGMAS,
)
from errors import ConvergenceError, DomainError, SamplerError
from fock_core import (
    ComplexPoint,
    FockVector,
    OperatorMatrix,
    PointLike,
    as_complex,
    coherent_amplitudes,
    coherent_centroid,
    coherent_state,
    expectation,
    mean_photon_number,
    quadrature_operators,
)
from quad import QuadGrid, default_extent, integrate, make_grid
from channel import ChannelParams, _output_vectors
from sampler import BetaSampler, SamplerConfig, batch_generator, SHOT_BATCH

logger = logging.getLogger("verify")


class BasisKind(Enum):
    """验证测量类型"""
    HOMODYNE_X = "homodyne-x"
    HOMODYNE_Y = "homodyne-y"
    EIGHT_PORT = "eight-port"
    NUMBER = "number"


@dataclass(frozen=True, eq=False)
class VerificationBasis:
    """
    离散化的 POVM {w_V |V⟩⟨V|}

    nodes 为测量结果 (零差为实数 x，八端口为复数 α，光子数为整数 n)，
    vectors[v] 为 ⟨n|V⟩ 的振幅。
    """
    kind: BasisKind
    nodes: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray

    @property
    def cutoff(self) -> int:
        return self.vectors.shape[1] - 1

    def resolution(self) -> np.ndarray:
        """Σ_V w_V |V⟩⟨V|"""
        weighted = self.vectors * self.weights[:, None]
        return weighted.T @ np.conj(self.vectors)


@dataclass(frozen=True)
class Distribution:
    """节点上的概率 (密度) 值及其总质量"""
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    mass: float
    boundary_mass: float
    converged: bool

    def mean(self) -> complex:
        return complex(np.sum(self.weights * self.values * self.nodes) / self.mass)

    def variance(self) -> float:
        """实数节点上的方差"""
        mean = np.sum(self.weights * self.values * self.nodes) / self.mass
        return float(np.sum(self.weights * self.values * (self.nodes - mean) ** 2) / self.mass)


def quadrature_amplitudes(x: float, cutoff: int) -> np.ndarray:
    """
    零差本征态振幅 ⟨x|n⟩ = (2/π)^{1/4} (2ⁿ n!)^{-1/2} Hₙ(√2·x) e^{-x²}

    使用归一化厄米函数的稳定递推，x 可以是数组，结果最后一轴为 n。
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("零差测量值必须是有限值")
    xi = math.sqrt(2.0) * x
    out = np.empty(x.shape + (cutoff + 1,))
    out[..., 0] = (2.0 / math.pi) ** 0.25 * np.exp(-x * x)
    if cutoff >= 1:
        out[..., 1] = math.sqrt(2.0) * xi * out[..., 0]
    for n in range(1, cutoff):
        out[..., n + 1] = math.sqrt(2.0 / (n + 1)) * xi * out[..., n] - math.sqrt(n / (n + 1)) * out[..., n - 1]
    return out


def _homodyne_vectors(kind: BasisKind, x_nodes: np.ndarray, cutoff: int) -> np.ndarray:
    """⟨n|x⟩ (实数)；y 分量本征态为 ⟨n|y⟩ = iⁿ⟨n|x⟩"""
    amplitudes = quadrature_amplitudes(x_nodes, cutoff).astype(complex)
    if kind is BasisKind.HOMODYNE_Y:
        amplitudes = amplitudes * np.array([1, 1j, -1, -1j])[np.arange(cutoff + 1) % 4]
    return amplitudes


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    h = nodes[1] - nodes[0]
    weights = np.full(nodes.size, h)
    weights[0] = weights[-1] = h / 2.0
    return weights


def homodyne_nodes(center: float, half_width: float, points: int = HOMODYNE_POINTS) -> np.ndarray:
    if half_width <= 0 or points < 3:
        raise DomainError(f"零差网格参数无效: half_width={half_width}, points={points}")
    return np.linspace(center - half_width, center + half_width, points)


def quadrature_statistics(state, kind: BasisKind = BasisKind.HOMODYNE_X) -> Tuple[float, float]:
    """纯态 (FockVector) 或混态 (OperatorMatrix) 的正交分量均值与标准差"""
    x_op, y_op = quadrature_operators(state.cutoff)
    op = x_op if BasisKind(kind) is BasisKind.HOMODYNE_X else y_op
    if isinstance(state, FockVector):
        mean = expectation(state, op).real
        second = expectation(state, op @ op).real
    else:
        mean = float(np.trace(state.entries @ op.entries).real)
        second = float(np.trace(state.entries @ (op @ op).entries).real)
    return mean, math.sqrt(max(second - mean * mean, 0.0))


def default_homodyne_nodes(mean: float, std: float, cutoff: int, points: int = HOMODYNE_POINTS) -> np.ndarray:
    """
    以目标态分布为中心的零差网格: 均值 ± 8 个标准差，
    且至少覆盖到 √(cutoff+1)+4 以容纳高阶厄米函数
    """
    half_width = max(HOMODYNE_WIDTH_SIGMAS * std, math.sqrt(cutoff + 1) + 4.0)
    return homodyne_nodes(mean, half_width, points)


def default_alpha_grid(psi: FockVector, params: ChannelParams, points_per_axis: int = DEFAULT_POINTS_PER_AXIS) -> QuadGrid:
    """
    八端口零差的 α 网格，以输入态相干质心为中心

    半宽同时覆盖输出 Q 函数的展宽与内部子空间 n ≤ cutoff/2 的相干态完备性
    """
    center = coherent_centroid(psi)
    excess = max(mean_photon_number(psi) - abs(center) ** 2, 0.0)
    extent = max(
        default_extent(params.q, center, math.sqrt(excess)),
        abs(center) + math.sqrt(params.cutoff / 2.0 + 1.0) + 5.0,
    )
    return make_grid(center, extent, points_per_axis)


def make_basis(
    kind: BasisKind,
    cutoff: int,
    x_nodes: Optional[np.ndarray] = None,
    alpha_grid: Optional[QuadGrid] = None,
) -> VerificationBasis:
    """
    构造离散化验证基

    Args:
        kind: 测量类型
        cutoff: 截断光子数
        x_nodes: 零差测量值节点 (默认以 0 为中心、半宽 √(cutoff+1)+4)
        alpha_grid: 八端口零差的 α 网格
    """
    kind = BasisKind(kind)
    if kind is BasisKind.NUMBER:
        nodes = np.arange(cutoff + 1)
        return VerificationBasis(kind, nodes, np.ones(cutoff + 1), np.eye(cutoff + 1, dtype=complex))
    if kind is BasisKind.EIGHT_PORT:
        if alpha_grid is None:
            raise DomainError("八端口零差基需要 α 网格")
        vectors = coherent_amplitudes(alpha_grid.nodes, cutoff)
        return VerificationBasis(kind, alpha_grid.nodes, alpha_grid.weights / math.pi, vectors)
    if x_nodes is None:
        x_nodes = homodyne_nodes(0.0, math.sqrt(cutoff + 1) + 4.0)
    x_nodes = np.asarray(x_nodes, dtype=float)
    return VerificationBasis(kind, x_nodes, _trapezoid_weights(x_nodes), _homodyne_vectors(kind, x_nodes, cutoff))


def basis_completeness_deviation(basis: VerificationBasis, max_index: Optional[int] = None) -> float:
    """内部子空间 (默认 n ≤ cutoff/2) 上 max|Σ_V w_V|V⟩⟨V| - 1|"""
    if max_index is None:
        max_index = basis.cutoff // 2
    block = basis.resolution()[: max_index + 1, : max_index + 1]
    return float(np.max(np.abs(block - np.eye(max_index + 1))))


def check_completeness(basis: VerificationBasis, max_index: Optional[int] = None) -> float:
    deviation = basis_completeness_deviation(basis, max_index)
    if deviation > COMPLETENESS_TOLERANCE:
        raise ConvergenceError(f"{basis.kind.value} 基完备性偏差 {deviation:.3g} > {COMPLETENESS_TOLERANCE}")
    logger.debug(f"{basis.kind.value} 基完备性偏差 {deviation:.3g}")
    return deviation


def _line_distribution(nodes: np.ndarray, values: np.ndarray) -> Distribution:
    weights = _trapezoid_weights(nodes)
    mass = float(np.sum(weights * values))
    edge = float(values[0] + values[-1])
    total = float(np.sum(np.abs(values)))
    boundary_mass = edge / total if total > 0 else 0.0
    return Distribution(nodes, weights, values, mass, boundary_mass, boundary_mass <= BOUNDARY_MASS_TOLERANCE)


def homodyne_distribution(psi: FockVector, x_nodes, kind: BasisKind = BasisKind.HOMODYNE_X) -> Distribution:
    """零差测量分布 p(x) = |Σₙ ⟨x|n⟩ψₙ|²"""
    psi.require_normalized()
    x_nodes = np.asarray(x_nodes, dtype=float)
    vectors = _homodyne_vectors(BasisKind(kind), x_nodes, psi.cutoff)
    values = np.abs(np.conj(vectors) @ psi.amplitudes) ** 2
    return _line_distribution(x_nodes, values)


def homodyne_distribution_from_density(rho: OperatorMatrix, x_nodes, kind: BasisKind = BasisKind.HOMODYNE_X) -> Distribution:
    """混态的零差分布 p(x) = ⟨x|ρ|x⟩"""
    x_nodes = np.asarray(x_nodes, dtype=float)
    vectors = _homodyne_vectors(BasisKind(kind), x_nodes, rho.cutoff)
    values = np.einsum("vm,mn,vn->v", np.conj(vectors), rho.entries, vectors).real
    return _line_distribution(x_nodes, values)


def eight_port_distribution(psi: FockVector, alpha_grid: QuadGrid) -> Distribution:
    """八端口零差 (Q 函数) 分布 Q(α) = |⟨α|ψ⟩|²/π"""
    psi.require_normalized()
    values = np.abs(np.conj(coherent_amplitudes(alpha_grid.nodes, psi.cutoff)) @ psi.amplitudes) ** 2 / math.pi
    result = integrate(values, alpha_grid)
    return Distribution(alpha_grid.nodes, alpha_grid.weights, values, float(result.value), result.boundary_mass, result.converged)


def eight_port_distribution_from_density(rho: OperatorMatrix, alpha_grid: QuadGrid) -> Distribution:
    """混态的 Q 函数 ⟨α|ρ|α⟩/π"""
    vectors = coherent_amplitudes(alpha_grid.nodes, rho.cutoff)
    values = np.einsum("vm,mn,vn->v", np.conj(vectors), rho.entries, vectors).real / math.pi
    result = integrate(values, alpha_grid)
    return Distribution(alpha_grid.nodes, alpha_grid.weights, values, float(result.value), result.boundary_mass, result.converged)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """
    联合分布 P(β,V) = |⟨V|T(β)|ψ⟩|²

    values[i, v] 对应 β 网格第 i 个节点与验证结果 v。
    """
    beta_grid: QuadGrid
    basis: VerificationBasis
    values: np.ndarray

    @cached_property
    def beta_marginal(self) -> np.ndarray:
        """Σ_V w_V P(β,V)，应等于 P(β)"""
        return self.values @ self.basis.weights

    @cached_property
    def verification_marginal(self) -> np.ndarray:
        """P(V) = ∫d²β P(β,V)"""
        return integrate(self.values, self.beta_grid).value

    @cached_property
    def total_mass(self) -> float:
        return float(np.real(np.sum(self.verification_marginal * self.basis.weights)))


def joint_distribution(
    psi: FockVector,
    params: ChannelParams,
    basis: VerificationBasis,
    beta_grid: QuadGrid,
) -> JointDistribution:
    """
    在 β 网格与验证基上计算联合分布

    要求验证基在内部子空间上通过完备性检查。
    """
    psi.require_normalized()
    if basis.cutoff != params.cutoff or psi.cutoff != params.cutoff:
        raise DomainError("验证基、输入态与信道的截断维度必须一致")
    check_completeness(basis)

    def integrand(betas: np.ndarray) -> np.ndarray:
        outputs = _output_vectors(psi, betas, params)
        return np.abs(outputs @ np.conj(basis.vectors).T) ** 2

    values = np.concatenate(
        [integrand(beta_grid.nodes[start:start + 256]) for start in range(0, beta_grid.size, 256)]
    )
    joint = JointDistribution(beta_grid, basis, values)
    boundary = integrate(joint.beta_marginal, beta_grid)
    if not boundary.converged:
        raise ConvergenceError(f"联合分布的 β 网格边界质量 {boundary.boundary_mass:.3g} 过大")
    return joint


def verification_probability(
    psi: FockVector,
    params: ChannelParams,
    basis: VerificationBasis,
    beta_grid: QuadGrid,
) -> np.ndarray:
    """验证结果分布 P(V) = ∫d²β |⟨V|T(β)|ψ⟩|²"""
    return joint_distribution(psi, params, basis, beta_grid).verification_marginal


def reconstruct_gamma(beta: PointLike, alpha: PointLike, params: ChannelParams) -> ComplexPoint:
    """由传态结果 β 与验证结果 α 重建相干场 γ = β + q(α-β)"""
    beta = as_complex(beta)
    alpha = as_complex(alpha)
    return ComplexPoint.from_complex(beta + params.q * (alpha - beta))


def effective_measurement_state(
    beta: PointLike,
    alpha: PointLike,
    params: ChannelParams,
) -> Tuple[float, ComplexPoint, FockVector]:
    """
    八端口零差验证的有效测量基 |β,α⟩ = T(β)|α⟩/√π = prefactor·|γ⟩

    prefactor = (√(1-q²)/π)·exp(-(1-q²)|α-β|²/2)。
    返回的态携带全局相位 exp(i(1-q)·Im(β*α))，使 T(β)|α⟩/√π 与 prefactor·state 逐元素相等；
    振幅为无穷维相干态的精确矩阵元 (不在截断后重新归一化)。
    """
    beta = as_complex(beta)
    alpha = as_complex(alpha)
    q = params.q
    prefactor = math.sqrt(1.0 - q * q) / math.pi * math.exp(-(1.0 - q * q) * abs(alpha - beta) ** 2 / 2.0)
    gamma = reconstruct_gamma(beta, alpha, params)
    phase = np.exp(1j * (1.0 - q) * (beta.conjugate() * alpha).imag)
    state = FockVector(phase * coherent_state(gamma, params.cutoff).amplitudes)
    return prefactor, gamma, state


@dataclass(frozen=True, eq=False)
class JointSample:
    """联合测量 (β, α) 的采样结果及重建的 γ"""
    betas: np.ndarray
    alphas: np.ndarray
    gammas: np.ndarray


def _draw_alpha(psi: FockVector, beta: complex, params: ChannelParams, rng: np.random.Generator, limit: int) -> complex:
    """
    给定 β 从 P(α|β) ∝ exp(-(1-q²)|α-β|²)·|⟨γ|ψ⟩|² 中采样

    高斯提议分布精确归一，接受概率 |⟨γ|ψ⟩|² ≤ 1。
    """
    rate = 1.0 - params.q * params.q
    std = math.sqrt(0.5 / rate)
    for _ in range(limit):
        alpha = beta + complex(*rng.normal(0.0, std, size=2))
        gamma = beta + params.q * (alpha - beta)
        acceptance = abs(np.vdot(coherent_amplitudes(gamma, psi.cutoff), psi.amplitudes)) ** 2
        if acceptance > 1.0 + 1e-12:
            raise SamplerError(f"八端口验证接受率 {acceptance:.6g} > 1")
        if rng.random() < acceptance:
            return alpha
    raise SamplerError(f"八端口验证采样连续拒绝超过 {limit} 次")


def sample_joint(psi: FockVector, params: ChannelParams, n_draws: int, config: SamplerConfig) -> JointSample:
    """
    两步测量的蒙特卡罗实现: 先从 P(β) 采样传态结果，
    再对输出态做八端口零差得到 α，并重建 γ = β + q(α-β)
    """
    if int(n_draws) != n_draws or n_draws < 1:
        raise DomainError(f"n_draws 必须 ≥ 1: {n_draws}")
    sampler = BetaSampler(psi, params, config)
    betas = []
    alphas = []
    for batch_index, start in enumerate(range(0, n_draws, SHOT_BATCH)):
        count = min(SHOT_BATCH, n_draws - start)
        rng = batch_generator(config.seed, batch_index)
        batch_betas, _, _, _ = sampler.draw(rng, count)
        for beta in batch_betas:
            betas.append(beta)
            alphas.append(_draw_alpha(psi, beta, params, rng, config.max_rejections_per_draw))
    betas = np.array(betas)
    alphas = np.array(alphas)
    gammas = betas + params.q * (alphas - betas)
    logger.info(f"联合采样完成，共 {n_draws} 次")
    return JointSample(betas, alphas, gammas)


def q_function_moments(psi: FockVector) -> Tuple[complex, np.ndarray]:
    """
    输入态 Q 函数的均值与协方差 (实部、虚部)

    Q 函数的每个分量方差比对应正交分量多 1/4。
    """
    x_op, y_op = quadrature_operators(psi.cutoff)
    mean_x = expectation(psi, x_op).real
    mean_y = expectation(psi, y_op).real
    var_x = expectation(psi, x_op @ x_op).real - mean_x ** 2
    var_y = expectation(psi, y_op @ y_op).real - mean_y ** 2
    cov_xy = 0.5 * expectation(psi, x_op @ y_op + y_op @ x_op).real - mean_x * mean_y
    covariance = np.array([[var_x + 0.25, cov_xy], [cov_xy, var_y + 0.25]])
    return complex(mean_x, mean_y), covariance
