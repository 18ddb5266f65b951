"""
有限纠缠连续变量隐形传态信道
EPR 资源、两种表示下的转移算符 T(β)、测量概率、保真度以及平均输出密度矩阵
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import HIGH_Q_OCCUPATION_FACTOR, MAX_Q_DEFAULT, UNDERFLOW_THRESHOLD
from errors import ConvergenceError, DomainError, UnderflowError
from fock_core import (
    ComplexPoint,
    FockVector,
    OperatorMatrix,
    PointLike,
    as_complex,
    coherent_amplitudes,
    coherent_centroid,
    displacement_matrices,
    interior_max_index,
    mean_photon_number,
)
from quad import QuadGrid, QuadResult, default_extent, integrate, make_grid

logger = logging.getLogger("channel")


@dataclass(frozen=True)
class ChannelParams:
    """纠缠参数 q 与截断光子数 cutoff"""
    q: float
    cutoff: int
    allow_high_q: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.q) and 0.0 <= self.q < 1.0):
            raise DomainError(f"q 必须满足 0 ≤ q < 1: q={self.q}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise DomainError(f"cutoff 必须是非负整数: {self.cutoff}")
        if self.q > MAX_Q_DEFAULT:
            if not self.allow_high_q:
                raise DomainError(f"q={self.q} 超过默认上限 {MAX_Q_DEFAULT}，需要显式允许高 q")
            occupation = self.thermal_occupation
            if self.cutoff < HIGH_Q_OCCUPATION_FACTOR * occupation:
                raise DomainError(
                    f"q={self.q} 时等效热占据数 {occupation:.3g}，要求 cutoff ≥ {HIGH_Q_OCCUPATION_FACTOR * occupation:.3g}"
                )
            logger.warning(f"使用高纠缠参数 q={self.q}，截断误差随 q→1 增大")

    @property
    def thermal_occupation(self) -> float:
        """q²/(1-q²)，每个模式的平均光子数"""
        return self.q * self.q / (1.0 - self.q * self.q)

    def transfer_weights(self) -> np.ndarray:
        """T(β) 的本征值 √((1-q²)/π)·qⁿ, n=0..cutoff"""
        n = np.arange(self.cutoff + 1)
        return math.sqrt((1.0 - self.q * self.q) / math.pi) * np.power(self.q, n)


@dataclass(frozen=True, eq=False)
class SchmidtCoefficients:
    """双模压缩态 √(1-q²) Σ qⁿ |n;n⟩ 的 Schmidt 系数"""
    coefficients: np.ndarray

    def norm_squared(self) -> float:
        return float(np.sum(self.coefficients ** 2))

    def mean_photon_number(self) -> float:
        return float(np.sum(np.arange(self.coefficients.size) * self.coefficients ** 2))


@dataclass(frozen=True)
class TeleportResult:
    """单次隐形传态事件: 测量结果 β、权重 P(β)、归一化输出态与条件保真度"""
    beta: ComplexPoint
    weight: float
    output: Optional[FockVector]
    conditional_fidelity: Optional[float]
    underflow: bool = False


def epr_schmidt(params: ChannelParams) -> SchmidtCoefficients:
    n = np.arange(params.cutoff + 1)
    coefficients = math.sqrt(1.0 - params.q * params.q) * np.power(params.q, n)
    coefficients.setflags(write=False)
    return SchmidtCoefficients(coefficients)


def _hermitian_from_upper(matrices: np.ndarray) -> np.ndarray:
    """由上三角构造严格厄米矩阵 (最后两轴)"""
    upper = np.triu(matrices, 1)
    diagonal = np.real(np.diagonal(matrices, axis1=-2, axis2=-1))
    out = upper + np.conj(np.swapaxes(upper, -1, -2))
    idx = np.arange(matrices.shape[-1])
    out[..., idx, idx] = diagonal
    return out


def _gram(columns: np.ndarray) -> np.ndarray:
    """B·B† (批量)，结果严格厄米"""
    return _hermitian_from_upper(columns @ np.conj(np.swapaxes(columns, -1, -2)))


def transfer_operators(betas, params: ChannelParams) -> np.ndarray:
    """批量计算 T(β) = D(β)·diag(√((1-q²)/π)·qⁿ)·D(β)†"""
    displacements = displacement_matrices(betas, params.cutoff)
    return _gram(displacements * np.sqrt(params.transfer_weights()))


def transfer_operator(beta: PointLike, params: ChannelParams) -> OperatorMatrix:
    """
    转移算符 T(β) = √((1-q²)/π) Σ qⁿ D(β)|n⟩⟨n|D(-β)

    Hermitian 半正定，截断后在内部子空间 (排除顶部 ceil(4|β|²+8) 个能级) 上精确。
    """
    beta = as_complex(beta)
    if interior_max_index(abs(beta), params.cutoff) < 0:
        logger.warning(f"|β|={abs(beta):.4g} 超出 cutoff={params.cutoff} 的验证精度范围")
    return OperatorMatrix(transfer_operators(beta, params))


def coherent_rep_width(q: float) -> float:
    """相干态表示所需的网格覆盖半径 4√(q/(1-q)) + 2"""
    return 4.0 * math.sqrt(q / (1.0 - q)) + 2.0


def transfer_operator_coherent_rep(beta: PointLike, params: ChannelParams, grid: QuadGrid) -> OperatorMatrix:
    """
    相干态 (热分布类比) 表示下的转移算符

    T(β) = √((1-q²)/(π³q²)) ∫d²α exp(-((1-q)/q)|α-β|²) |α⟩⟨α|

    Raises:
        DomainError: q=0 时前因子奇异
        ConvergenceError: 网格未覆盖 β ± (4√(q/(1-q))+2) 或边界质量过大
    """
    q = params.q
    if q == 0.0:
        raise DomainError("相干态表示要求 q > 0")
    beta = as_complex(beta)
    width = coherent_rep_width(q)
    center = complex(grid.center)
    if abs(beta.real - center.real) + width > grid.extent or abs(beta.imag - center.imag) + width > grid.extent:
        raise ConvergenceError(f"网格半宽 {grid.extent} 不足以覆盖 β ± {width:.4g}")

    prefactor = math.sqrt((1.0 - q * q) / (math.pi ** 3 * q * q))
    decay = (1.0 - q) / q

    def integrand(alphas: np.ndarray) -> np.ndarray:
        amplitudes = coherent_amplitudes(alphas, params.cutoff)
        weight = prefactor * np.exp(-decay * np.abs(alphas - beta) ** 2)
        return weight[:, None, None] * (amplitudes[:, :, None] * np.conj(amplitudes[:, None, :]))

    result = integrate(integrand, grid).require_converged("相干态表示积分")
    return OperatorMatrix(_hermitian_from_upper(result.value))


def _displaced_batch(psi: FockVector, betas: np.ndarray) -> np.ndarray:
    """φ(β) = D(-β)|ψ⟩ = D(β)†|ψ⟩，形状 (B, cutoff+1)"""
    displacements = displacement_matrices(betas, psi.cutoff)
    return np.einsum("bmk,m->bk", np.conj(displacements), psi.amplitudes)


def _check_params(psi: FockVector, params: ChannelParams) -> None:
    if psi.cutoff != params.cutoff:
        raise DomainError(f"截断维度不一致: 态 {psi.cutoff} != 信道 {params.cutoff}")
    psi.require_normalized()


def displaced_amplitudes(psi: FockVector, beta: PointLike) -> FockVector:
    """位移光子数基下的振幅 ⟨n|D(-β)|ψ⟩"""
    return FockVector(_displaced_batch(psi, np.array([as_complex(beta)]))[0])


def displaced_number_distribution(psi: FockVector, beta: PointLike) -> np.ndarray:
    """位移光子数分布 pₙ = |⟨n|D(-β)|ψ⟩|²"""
    return np.abs(displaced_amplitudes(psi, beta).amplitudes) ** 2


def fidelity_terms(psi: FockVector, betas, params: ChannelParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    批量计算 P(β) 与 ⟨ψ|T(β)|ψ⟩

    两者都由位移光子数和给出，不构造 T² 矩阵:
    P(β) = ((1-q²)/π) Σ q^{2n} |φₙ|²，⟨ψ|T|ψ⟩ = √((1-q²)/π) Σ qⁿ |φₙ|²
    """
    betas = np.asarray(betas, dtype=complex).reshape(-1)
    populations = np.abs(_displaced_batch(psi, betas)) ** 2
    weights = params.transfer_weights()
    probabilities = populations @ (weights * weights)
    diagonal = populations @ weights
    return probabilities, diagonal


def measurement_probability(psi: FockVector, beta: PointLike, params: ChannelParams) -> float:
    """测量结果 β 的概率密度 P(β) = ⟨ψ|T²(β)|ψ⟩"""
    _check_params(psi, params)
    probabilities, _ = fidelity_terms(psi, as_complex(beta), params)
    return float(probabilities[0])


def measurement_probabilities(psi: FockVector, betas, params: ChannelParams) -> np.ndarray:
    _check_params(psi, params)
    return fidelity_terms(psi, betas, params)[0]


def reference_measurement_probability(psi_a: FockVector, psi_r: FockVector, beta: PointLike) -> float:
    """参考场处于已知态 ψ_R 时的测量概率 (1/π)|⟨ψ_A|D(β)|ψ_R*⟩|²"""
    psi_a.require_normalized("psi_A")
    psi_r.require_normalized("psi_R")
    if psi_a.cutoff != psi_r.cutoff:
        raise DomainError(f"截断维度不一致: {psi_a.cutoff} != {psi_r.cutoff}")
    displacement = displacement_matrices(as_complex(beta), psi_a.cutoff)
    amplitude = np.vdot(psi_a.amplitudes, displacement @ np.conj(psi_r.amplitudes))
    return float(abs(amplitude) ** 2 / math.pi)


def remote_state(psi: FockVector, beta: PointLike, params: ChannelParams) -> FockVector:
    """远端场 B 在撤销位移之前的 (未归一化) 态 √((1-q²)/π) Σ qⁿ |n⟩⟨n|D(-β)|ψ⟩"""
    _check_params(psi, params)
    return FockVector(params.transfer_weights() * displaced_amplitudes(psi, beta).amplitudes)


def _fidelity_from_terms(probability: float, diagonal: float) -> float:
    return min(1.0, max(0.0, diagonal * diagonal / probability))


def teleport_pure(psi: FockVector, beta: PointLike, params: ChannelParams) -> TeleportResult:
    """
    对测量结果 β 执行一次隐形传态，输出 T(β)|ψ⟩ (归一化) 及其权重

    权重低于下溢阈值时返回带 underflow 标记的结果，输出态未定义。
    """
    _check_params(psi, params)
    beta = as_complex(beta)
    point = ComplexPoint.from_complex(beta)
    phi = _displaced_batch(psi, np.array([beta]))[0]
    weights = params.transfer_weights()
    displacement = displacement_matrices(beta, params.cutoff)
    output = displacement @ (weights * phi)
    weight = float(np.vdot(output, output).real)
    if weight < UNDERFLOW_THRESHOLD:
        logger.debug(f"β={beta} 处权重 {weight:.3g} 下溢")
        return TeleportResult(point, weight, None, None, underflow=True)
    populations = np.abs(phi) ** 2
    probability = float(populations @ (weights * weights))
    diagonal = float(populations @ weights)
    fidelity = _fidelity_from_terms(probability, diagonal)
    return TeleportResult(point, weight, FockVector(output / math.sqrt(weight)), fidelity)


def conditional_fidelity(psi: FockVector, beta: PointLike, params: ChannelParams) -> float:
    """单次事件保真度 F(β) = |⟨ψ|T(β)|ψ⟩|²/P(β)"""
    _check_params(psi, params)
    probabilities, diagonal = fidelity_terms(psi, as_complex(beta), params)
    if probabilities[0] < UNDERFLOW_THRESHOLD:
        raise UnderflowError(f"β={as_complex(beta)} 处 P(β)={probabilities[0]:.3g} 下溢")
    return _fidelity_from_terms(float(probabilities[0]), float(diagonal[0]))


def default_grid(psi: FockVector, params: ChannelParams, points_per_axis: int = 101, interior: int = 0) -> QuadGrid:
    """
    以输入态相干质心为中心的默认 β 网格

    半宽 L = |⟨a⟩| + 4/√(1-q²) + 2 + 2·√(⟨n⟩-|⟨a⟩|² + interior)
    """
    center = coherent_centroid(psi)
    excess = max(mean_photon_number(psi) - abs(center) ** 2, 0.0)
    extent = default_extent(params.q, center, math.sqrt(excess + interior))
    return make_grid(center, extent, points_per_axis)


def integrate_average_fidelity(psi: FockVector, params: ChannelParams, grid: QuadGrid) -> QuadResult:
    """∫d²β |⟨ψ|T(β)|ψ⟩|²，返回带边界诊断的积分结果"""
    _check_params(psi, params)

    def integrand(betas: np.ndarray) -> np.ndarray:
        _, diagonal = fidelity_terms(psi, betas, params)
        return diagonal * diagonal

    result = integrate(integrand, grid)
    return QuadResult(float(np.real(result.value)), result.boundary_mass, result.converged)


def average_fidelity(psi: FockVector, params: ChannelParams, grid: QuadGrid) -> float:
    """平均保真度 F_av = ∫d²β |⟨ψ|T(β)|ψ⟩|²，积分未收敛时抛出 ConvergenceError"""
    return integrate_average_fidelity(psi, params, grid).require_converged("平均保真度积分").value


def _output_vectors(psi: FockVector, betas: np.ndarray, params: ChannelParams) -> np.ndarray:
    """T(β)|ψ⟩ (批量，未归一化)"""
    displacements = displacement_matrices(betas, params.cutoff)
    phi = np.einsum("bmk,m->bk", np.conj(displacements), psi.amplitudes)
    return np.einsum("bmk,bk->bm", displacements, params.transfer_weights() * phi)


def integrate_output_density_matrix(psi: FockVector, params: ChannelParams, grid: QuadGrid) -> QuadResult:
    _check_params(psi, params)

    def integrand(betas: np.ndarray) -> np.ndarray:
        outputs = _output_vectors(psi, betas, params)
        return outputs[:, :, None] * np.conj(outputs[:, None, :])

    result = integrate(integrand, grid)
    return QuadResult(_hermitian_from_upper(result.value), result.boundary_mass, result.converged)


def output_density_matrix(psi: FockVector, params: ChannelParams, grid: QuadGrid) -> OperatorMatrix:
    """系综平均输出密度矩阵 ρ_out = ∫d²β T(β)|ψ⟩⟨ψ|T(β)"""
    result = integrate_output_density_matrix(psi, params, grid).require_converged("输出密度矩阵积分")
    return OperatorMatrix(result.value)


def integrated_transfer_square(params: ChannelParams, grid: QuadGrid, interior: Optional[int] = None) -> OperatorMatrix:
    """∫d²β T²(β)，在内部子空间上应为单位矩阵 (信道保迹)"""
    weights = params.transfer_weights()

    def integrand(betas: np.ndarray) -> np.ndarray:
        return _gram(displacement_matrices(betas, params.cutoff) * weights)

    result = integrate(integrand, grid, interior=interior).require_converged("∫T² 积分")
    return OperatorMatrix(_hermitian_from_upper(result.value))


def reference_povm_completeness(psi_r: FockVector, grid: QuadGrid, interior: Optional[int] = None) -> OperatorMatrix:
    """
    数值积分 (1/π)∫d²β D(β)|ψ_R*⟩⟨ψ_R*|D†(β)

    调用方在内部子空间上检查其与单位矩阵的偏差。
    """
    psi_r.require_normalized("psi_R")
    conjugate = np.conj(psi_r.amplitudes)

    def integrand(betas: np.ndarray) -> np.ndarray:
        vectors = displacement_matrices(betas, psi_r.cutoff) @ conjugate
        return vectors[:, :, None] * np.conj(vectors[:, None, :]) / math.pi

    result = integrate(integrand, grid, interior=interior).require_converged("测量基完备性积分")
    return OperatorMatrix(_hermitian_from_upper(result.value))


def identity_deviation(matrix: OperatorMatrix, max_index: int) -> float:
    """内部子空间 n ≤ max_index 上 max|M - 1|"""
    block = matrix.interior(max_index)
    return float(np.max(np.abs(block - np.eye(block.shape[0]))))
