"""
隐形传态事件的蒙特卡罗模拟
从 P(β) 中拒绝采样测量结果 β，并生成 ShotRecord
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.stats import chi2

from config import MAX_REJECTIONS_PER_DRAW, RNG_VERSION_TAG, UNDERFLOW_THRESHOLD
from errors import DomainError, SamplerError
from fock_core import ComplexPoint, FockVector, coherent_centroid, coherent_state, mean_photon_number, overlap
from channel import ChannelParams, fidelity_terms, teleport_pure

logger = logging.getLogger("sampler")

# 每批次的事件数固定，批次种子由 (seed, batch_index) 派生
SHOT_BATCH = 1024
# 包络常数的安全系数
ENVELOPE_SAFETY = 1.1
ENVELOPE_SCAN_POINTS = 61
ENVELOPE_SCAN_SIGMAS = 6.0


@dataclass(frozen=True)
class SamplerConfig:
    """采样器配置"""
    seed: int
    max_rejections_per_draw: int = MAX_REJECTIONS_PER_DRAW
    store_amplitudes: bool = False
    workers: int = 1

    def __post_init__(self):
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed 必须是 64 位无符号整数: {self.seed}")
        if self.max_rejections_per_draw <= 0:
            raise DomainError(f"最大拒绝次数必须为正: {self.max_rejections_per_draw}")
        if self.workers < 1:
            raise DomainError(f"workers 必须 ≥ 1: {self.workers}")

    @property
    def rng_version(self) -> str:
        return RNG_VERSION_TAG


@dataclass(frozen=True)
class ShotRecord:
    """一次采样得到的隐形传态事件"""
    shot_index: int
    beta: ComplexPoint
    conditional_fidelity: float
    weight_at_beta: float
    output: Optional[FockVector] = None

    def to_row(self) -> list:
        return [self.shot_index, self.beta.re, self.beta.im, self.conditional_fidelity, self.weight_at_beta]


@dataclass(frozen=True)
class ShotSummary:
    n_shots: int
    mean_fidelity: float
    stderr: float
    acceptance_rate: float

    def to_dict(self) -> dict:
        return {
            "n_shots": self.n_shots,
            "mean_fidelity": self.mean_fidelity,
            "stderr": self.stderr,
            "acceptance_rate": self.acceptance_rate,
        }


def batch_generator(seed: int, batch_index: int) -> np.random.Generator:
    """批次独立的随机数发生器，结果与调度顺序无关"""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(batch_index)])))


@dataclass(frozen=True)
class BetaEnvelope:
    """
    拒绝采样包络 M·g(β)

    g 为以相干质心 ⟨a⟩ 为中心的各向同性高斯，每个分量方差取目标分布方差的两倍；
    目标分布每分量方差为 (⟨n⟩-|⟨a⟩|²)/2 + 1/(2(1-q²))。
    """
    center: complex
    variance: float
    bound: float

    def density(self, betas: np.ndarray) -> np.ndarray:
        return np.exp(-np.abs(betas - self.center) ** 2 / (2.0 * self.variance)) / (2.0 * math.pi * self.variance)

    def propose(self, rng: np.random.Generator, count: int) -> np.ndarray:
        std = math.sqrt(self.variance)
        samples = rng.normal(0.0, std, size=(count, 2))
        return self.center + samples[:, 0] + 1j * samples[:, 1]


def build_envelope(psi: FockVector, params: ChannelParams) -> BetaEnvelope:
    center = coherent_centroid(psi)
    excess = max(mean_photon_number(psi) - abs(center) ** 2, 0.0)
    variance = 2.0 * (excess / 2.0 + 0.5 / (1.0 - params.q * params.q))
    envelope = BetaEnvelope(center, variance, 1.0)

    reach = ENVELOPE_SCAN_SIGMAS * math.sqrt(variance)
    axis = np.linspace(-reach, reach, ENVELOPE_SCAN_POINTS)
    scan = (center + axis[None, :] + 1j * axis[:, None]).reshape(-1)
    probabilities = np.concatenate([fidelity_terms(psi, scan[start:start + 1024], params)[0] for start in range(0, scan.size, 1024)])
    ratio = float(np.max(probabilities / envelope.density(scan)))
    bound = ENVELOPE_SAFETY * ratio
    logger.debug(f"包络: 中心 {center:.4g}, 方差 {variance:.4g}, 常数 M={bound:.4g}")
    return BetaEnvelope(center, variance, bound)


class BetaSampler:
    """从 P(β) 中拒绝采样，记录接受率"""

    def __init__(self, psi: FockVector, params: ChannelParams, config: SamplerConfig, envelope: Optional[BetaEnvelope] = None):
        psi.require_normalized()
        if psi.cutoff != params.cutoff:
            raise DomainError(f"截断维度不一致: 态 {psi.cutoff} != 信道 {params.cutoff}")
        self.psi = psi
        self.params = params
        self.config = config
        self.envelope = envelope or build_envelope(psi, params)
        # P(β) 的全局上界 (1-q²)/π
        self.global_bound = (1.0 - params.q * params.q) / math.pi

    def draw(self, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
        """
        采样 count 个 β

        Returns:
            (betas, P(β), ⟨ψ|T(β)|ψ⟩, 提议总数)
        """
        betas = []
        probabilities = []
        diagonals = []
        proposed = 0
        accepted = 0
        streak = 0
        while accepted < count:
            size = min(max(2 * (count - accepted), 64), 1024)
            proposals = self.envelope.propose(rng, size)
            uniforms = rng.random(size)
            probability, diagonal = fidelity_terms(self.psi, proposals, self.params)
            if np.any(probability > self.global_bound * (1.0 + 1e-9)):
                raise SamplerError(f"P(β) 超过全局上界 {self.global_bound:.6g}")
            ratio = probability / (self.envelope.bound * self.envelope.density(proposals))
            if np.any(ratio > 1.0):
                raise SamplerError(f"接受率 {float(np.max(ratio)):.6g} > 1，包络常数过小")
            keep = uniforms < ratio
            for index in range(size):
                proposed += 1
                if not keep[index]:
                    streak += 1
                    if streak > self.config.max_rejections_per_draw:
                        raise SamplerError(f"单次采样连续拒绝超过 {self.config.max_rejections_per_draw} 次")
                    continue
                streak = 0
                betas.append(proposals[index])
                probabilities.append(probability[index])
                diagonals.append(diagonal[index])
                accepted += 1
                if accepted == count:
                    break
        return np.array(betas), np.array(probabilities), np.array(diagonals), proposed


def sample_beta(psi: FockVector, params: ChannelParams, rng: np.random.Generator, envelope: Optional[BetaEnvelope] = None) -> ComplexPoint:
    """从 P(β) 抽取一个测量结果"""
    sampler = BetaSampler(psi, params, SamplerConfig(seed=0), envelope)
    betas, _, _, _ = sampler.draw(rng, 1)
    return ComplexPoint.from_complex(betas[0])


def _run_batch(sampler: BetaSampler, batch_index: int, start: int, count: int) -> Tuple[List[ShotRecord], int]:
    rng = batch_generator(sampler.config.seed, batch_index)
    betas, probabilities, diagonals, proposed = sampler.draw(rng, count)
    records = []
    for offset, (beta, probability, diagonal) in enumerate(zip(betas, probabilities, diagonals)):
        if probability < UNDERFLOW_THRESHOLD:
            raise SamplerError(f"采样得到的 β={beta} 权重下溢")
        fidelity = min(1.0, max(0.0, float(diagonal * diagonal / probability)))
        output = None
        if sampler.config.store_amplitudes:
            output = teleport_pure(sampler.psi, beta, sampler.params).output
        records.append(ShotRecord(start + offset, ComplexPoint.from_complex(beta), fidelity, float(probability), output))
    return records, proposed


def run_shots_with_stats(psi: FockVector, params: ChannelParams, n_shots: int, config: SamplerConfig) -> Tuple[List[ShotRecord], float]:
    """执行 n_shots 次隐形传态事件，返回记录与接受率"""
    if int(n_shots) != n_shots or n_shots < 1:
        raise DomainError(f"n_shots 必须 ≥ 1: {n_shots}")
    sampler = BetaSampler(psi, params, config)
    batches = [(index, start, min(SHOT_BATCH, n_shots - start)) for index, start in enumerate(range(0, n_shots, SHOT_BATCH))]
    logger.info(f"开始采样 {n_shots} 次事件，共 {len(batches)} 批，workers={config.workers}")

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            results = list(executor.map(lambda batch: _run_batch(sampler, *batch), batches))
    else:
        results = [_run_batch(sampler, *batch) for batch in batches]

    records = [record for batch_records, _ in results for record in batch_records]
    proposed = sum(count for _, count in results)
    acceptance = n_shots / proposed
    logger.info(f"采样完成，接受率 {acceptance:.3f}")
    return records, acceptance


def run_shots(psi: FockVector, params: ChannelParams, n_shots: int, config: SamplerConfig) -> List[ShotRecord]:
    return run_shots_with_stats(psi, params, n_shots, config)[0]


def summarize(records: List[ShotRecord], acceptance_rate: float = float("nan")) -> ShotSummary:
    """条件保真度的样本均值与标准误差 (估计 F_av)"""
    if not records:
        raise DomainError("没有可汇总的采样记录")
    fidelities = np.array([record.conditional_fidelity for record in records])
    n = fidelities.size
    stderr = float(np.std(fidelities, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return ShotSummary(n, float(np.mean(fidelities)), stderr, acceptance_rate)


def coherent_label(psi: FockVector, tolerance: float = 1e-9) -> Optional[complex]:
    """若 ψ 是相干态 (含真空) 则返回其标签 α，否则返回 None"""
    alpha = coherent_centroid(psi)
    reference = coherent_state(alpha, psi.cutoff)
    if abs(overlap(reference, psi)) ** 2 >= 1.0 - tolerance:
        return alpha
    return None


def chi_square_radial(betas: np.ndarray, psi: FockVector, params: ChannelParams, bins: int = 20) -> Tuple[float, float]:
    """
    相干态 (含真空) 输入下 β 的径向等概率分箱卡方检验

    P(β) = ((1-q²)/π) exp(-(1-q²)|β-α|²)，故 1-exp(-(1-q²)|β-α|²) 服从 [0,1) 均匀分布。

    Returns:
        (卡方统计量, p 值)
    """
    alpha = coherent_label(psi)
    if alpha is None:
        raise DomainError("径向卡方检验只适用于相干态或真空输入")
    betas = np.asarray(betas, dtype=complex)
    rate = 1.0 - params.q * params.q
    uniform = 1.0 - np.exp(-rate * np.abs(betas - alpha) ** 2)
    observed, _ = np.histogram(uniform, bins=bins, range=(0.0, 1.0))
    expected = betas.size / bins
    statistic = float(np.sum((observed - expected) ** 2 / expected))
    return statistic, float(chi2.sf(statistic, bins - 1))
