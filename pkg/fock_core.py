"""
截断 Fock 空间基础模块
提供态构造、位移算符、正交分量算符、内积以及特殊函数的数值计算
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import gammainc, gammaln

from config import LEAKAGE_TOLERANCE, NORMALIZATION_TOLERANCE
from errors import CutoffTooSmallError, DomainError

logger = logging.getLogger("fock_core")


@dataclass(frozen=True)
class ComplexPoint:
    """测量平面上的一点 β = x₋ + i·y₊，同样用于 α 与 γ"""
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError(f"复平面点必须是有限值: ({self.re}, {self.im})")

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __complex__(self) -> complex:
        return self.value

    def __abs__(self) -> float:
        return abs(self.value)

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexPoint":
        z = complex(z)
        return cls(z.real, z.imag)


PointLike = Union[ComplexPoint, complex, float, int]


def as_complex(z: PointLike) -> complex:
    """把 ComplexPoint 或数值统一转换为 complex，并检查有限性"""
    value = complex(z)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise DomainError(f"复平面点必须是有限值: {value}")
    return value


@dataclass(frozen=True, eq=False)
class FockVector:
    """
    光子数基下的截断纯态振幅

    amplitudes[n] 为光子数 n 的振幅，长度为 cutoff+1。
    未归一化的向量只在操作约定允许时出现，此时模方具有概率含义。
    """
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size == 0:
            raise DomainError("FockVector 至少需要一个振幅")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def leakage(self) -> float:
        """截断泄漏 1 - ‖ψ‖²"""
        return 1.0 - self.norm_squared()

    def is_normalized(self, tolerance: float = NORMALIZATION_TOLERANCE) -> bool:
        return abs(self.norm_squared() - 1.0) <= tolerance

    def require_normalized(self, name: str = "psi") -> None:
        norm_sq = self.norm_squared()
        if norm_sq == 0.0:
            raise DomainError(f"{name} 的模为零")
        if abs(norm_sq - 1.0) > NORMALIZATION_TOLERANCE:
            raise DomainError(f"{name} 未归一化: ‖ψ‖² = {norm_sq:.12g}")

    def normalized(self) -> "FockVector":
        """显式归一化，零向量会被拒绝"""
        norm_sq = self.norm_squared()
        if norm_sq == 0.0:
            raise DomainError("无法归一化零向量")
        return FockVector(self.amplitudes / math.sqrt(norm_sq))

    def conjugate(self) -> "FockVector":
        """系数取复共轭得到的态 Σ ⟨n|ψ⟩* |n⟩"""
        return FockVector(np.conj(self.amplitudes))

    def __len__(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """截断空间上的稠密复矩阵，维度 (cutoff+1)×(cutoff+1)"""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DomainError(f"OperatorMatrix 必须是方阵，实际形状 {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T)

    def is_hermitian(self, tolerance: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tolerance)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def interior(self, max_index: int) -> np.ndarray:
        """返回 n ≤ max_index 的子块"""
        return self.entries[: max_index + 1, : max_index + 1]

    def apply(self, vector: FockVector) -> FockVector:
        _check_same_cutoff(self.cutoff, vector.cutoff)
        return FockVector(self.entries @ vector.amplitudes)

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        if isinstance(other, OperatorMatrix):
            _check_same_cutoff(self.cutoff, other.cutoff)
            return OperatorMatrix(self.entries @ other.entries)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        _check_same_cutoff(self.cutoff, other.cutoff)
        return OperatorMatrix(self.entries + other.entries)

    def __sub__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        _check_same_cutoff(self.cutoff, other.cutoff)
        return OperatorMatrix(self.entries - other.entries)

    def __mul__(self, scalar):
        if isinstance(scalar, (OperatorMatrix, FockVector)):
            return NotImplemented
        return OperatorMatrix(complex(scalar) * self.entries)

    __rmul__ = __mul__


def _check_same_cutoff(a: int, b: int) -> None:
    if a != b:
        raise DomainError(f"截断维度不一致: {a} != {b}")


def _check_cutoff(cutoff: int) -> int:
    if int(cutoff) != cutoff or cutoff < 0:
        raise DomainError(f"cutoff 必须是非负整数: {cutoff}")
    return int(cutoff)


def _check_index(n: int, cutoff: int) -> int:
    if int(n) != n or not 0 <= n <= cutoff:
        raise DomainError(f"光子数 n={n} 超出范围 [0, {cutoff}]")
    return int(n)


def interior_max_index(beta_abs: float, cutoff: int) -> int:
    """位移 |β| 下精度声明覆盖的最高光子数 (排除顶部 ceil(4|β|²+8) 个能级)"""
    return cutoff - math.ceil(4.0 * beta_abs * beta_abs + 8.0)


def number_state(n: int, cutoff: int) -> FockVector:
    cutoff = _check_cutoff(cutoff)
    n = _check_index(n, cutoff)
    amplitudes = np.zeros(cutoff + 1, dtype=complex)
    amplitudes[n] = 1.0
    return FockVector(amplitudes)


def _unit_powers(z: np.ndarray, count: int) -> np.ndarray:
    """对每个 z 计算 (z/|z|)^k, k=0..count-1；z=0 时相位取 1"""
    r = np.abs(z)
    u = np.where(r > 0, z / np.where(r > 0, r, 1.0), 1.0 + 0j)
    powers = np.empty(z.shape + (count,), dtype=complex)
    powers[..., 0] = 1.0
    if count > 1:
        powers[..., 1:] = np.cumprod(np.repeat(u[..., None], count - 1, axis=-1), axis=-1)
    return powers


def _log_abs_powers(r: np.ndarray, count: int) -> np.ndarray:
    """k·ln r，r=0 时 k>0 的项为 -inf"""
    k = np.arange(count)
    safe_log = np.log(np.where(r > 0, r, 1.0))
    out = safe_log[..., None] * k
    return np.where((r[..., None] == 0) & (k > 0), -np.inf, out)


def coherent_amplitudes(alphas, cutoff: int) -> np.ndarray:
    """
    向量化计算相干态振幅 e^{-|α|²/2} αⁿ/√(n!)

    Args:
        alphas: 复数或复数数组
        cutoff: 截断光子数

    Returns:
        形状 alphas.shape + (cutoff+1,) 的复数组，不做重新归一化
    """
    cutoff = _check_cutoff(cutoff)
    alphas = np.asarray(alphas, dtype=complex)
    count = cutoff + 1
    r = np.abs(alphas)
    n = np.arange(count)
    log_mag = _log_abs_powers(r, count) - 0.5 * (r * r)[..., None] - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * _unit_powers(alphas, count)


def coherent_state(alpha: PointLike, cutoff: int) -> FockVector:
    """相干态 |α⟩，不重新归一化，截断泄漏可通过 coherent_leakage 或 FockVector.leakage 观察"""
    return FockVector(coherent_amplitudes(as_complex(alpha), cutoff))


def coherent_leakage(alpha: PointLike, cutoff: int) -> float:
    """相干态在截断之外的概率 Σ_{n>N} e^{-|α|²}|α|^{2n}/n!"""
    cutoff = _check_cutoff(cutoff)
    mean = abs(as_complex(alpha)) ** 2
    if mean == 0.0:
        return 0.0
    # 泊松分布 P(n ≥ N+1) 等于正则化下不完全伽马函数
    return float(gammainc(cutoff + 1, mean))


def displacement_matrices(betas, cutoff: int) -> np.ndarray:
    """
    批量计算位移算符矩阵元 ⟨m|D(β)|n⟩ = √(n!/m!) β^{m-n} e^{-|β|²/2} L_n^{(m-n)}(|β|²)

    使用归一化的关联拉盖尔递推 (在 n 方向上向上递推，阶数 k=m-n 固定)，
    初值在对数空间计算，避免阶乘溢出。m<n 的元素由伴随对称
    ⟨m|D(β)|n⟩ = conj(⟨n|D(-β)|m⟩) 给出，因此 D(-β) 与 D(β)† 逐元素一致。

    Returns:
        形状 betas.shape + (cutoff+1, cutoff+1) 的复数组
    """
    cutoff = _check_cutoff(cutoff)
    betas = np.asarray(betas, dtype=complex)
    batch_shape = betas.shape
    betas = betas.reshape(-1)
    count = cutoff + 1
    r = np.abs(betas)
    x = (r * r)[:, None]
    k = np.arange(count)[None, :]

    # g[b, n, k] = |β|^k e^{-x/2} √(n!/(n+k)!) L_n^{(k)}(x)
    g = np.empty((betas.size, count, count))
    g[:, 0, :] = np.exp(_log_abs_powers(r, count) - 0.5 * x - 0.5 * gammaln(k + 1))
    if count > 1:
        g[:, 1, :] = (1.0 + k - x) / np.sqrt(1.0 + k) * g[:, 0, :]
    for n in range(1, count - 1):
        g[:, n + 1, :] = ((2 * n + 1 + k - x) * g[:, n, :] - np.sqrt(n * (n + k)) * g[:, n - 1, :]) / np.sqrt(
            (n + 1) * (n + k + 1)
        )

    phases = _unit_powers(betas, count)
    rows, cols = np.indices((count, count))
    order = np.abs(rows - cols)
    low = np.minimum(rows, cols)
    signs = np.where(order % 2 == 0, 1.0, -1.0)
    phase = phases[:, order]
    phase = np.where(rows >= cols, phase, signs * np.conj(phase))
    matrices = phase * g[:, low, order]
    return matrices.reshape(batch_shape + (count, count))


def _warn_if_outside_accuracy(beta: complex, cutoff: int) -> None:
    if interior_max_index(abs(beta), cutoff) < 0:
        logger.warning(f"|β|={abs(beta):.4g} 超出 cutoff={cutoff} 的验证精度范围，内部子空间为空")


def displacement_matrix(beta: PointLike, cutoff: int) -> OperatorMatrix:
    """D(β) = exp(β a† - β* a) 的精确 (无穷维) 矩阵元在截断空间上的投影"""
    beta = as_complex(beta)
    _warn_if_outside_accuracy(beta, cutoff)
    return OperatorMatrix(displacement_matrices(beta, cutoff))


def displaced_number_state(beta: PointLike, n: int, cutoff: int) -> FockVector:
    """位移光子数态 D(β)|n⟩，即 displacement_matrix 的第 n 列"""
    cutoff = _check_cutoff(cutoff)
    n = _check_index(n, cutoff)
    return FockVector(displacement_matrix(beta, cutoff).entries[:, n])


def annihilation_operator(cutoff: int) -> OperatorMatrix:
    cutoff = _check_cutoff(cutoff)
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1))


def number_operator(cutoff: int) -> OperatorMatrix:
    cutoff = _check_cutoff(cutoff)
    return OperatorMatrix(np.diag(np.arange(cutoff + 1, dtype=float)))


def quadrature_operators(cutoff: int) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """
    正交分量算符 x = (a+a†)/2, y = (a-a†)/(2i)，真空方差为 1/4

    两者按构造严格厄米。
    """
    if _check_cutoff(cutoff) < 1:
        raise DomainError("quadrature_operators 要求 cutoff ≥ 1")
    a = annihilation_operator(cutoff).entries.real
    x = (a + a.T) / 2.0
    y = 1j * (a.T - a) / 2.0
    return OperatorMatrix(x), OperatorMatrix(y)


def overlap(u: FockVector, v: FockVector) -> complex:
    """内积 ⟨u|v⟩ = Σ conj(uₙ)·vₙ"""
    _check_same_cutoff(u.cutoff, v.cutoff)
    return complex(np.vdot(u.amplitudes, v.amplitudes))


def expectation(psi: FockVector, operator: OperatorMatrix) -> complex:
    """⟨ψ|O|ψ⟩"""
    _check_same_cutoff(psi.cutoff, operator.cutoff)
    return complex(np.vdot(psi.amplitudes, operator.entries @ psi.amplitudes))


def coherent_centroid(psi: FockVector) -> complex:
    """⟨ψ|a|ψ⟩"""
    amplitudes = psi.amplitudes
    if amplitudes.size < 2:
        return 0j
    shifted = np.sqrt(np.arange(1, amplitudes.size)) * amplitudes[1:]
    return complex(np.vdot(amplitudes[:-1], shifted))


def mean_photon_number(psi: FockVector) -> float:
    return float(np.sum(np.arange(psi.cutoff + 1) * np.abs(psi.amplitudes) ** 2))


def cat_state(alpha: PointLike, sign: int, cutoff: int) -> FockVector:
    """猫态 (|α⟩ ± |-α⟩)/norm，截断泄漏超过阈值时报错"""
    if sign not in (1, -1):
        raise DomainError(f"猫态符号必须为 ±1: {sign}")
    alpha = as_complex(alpha)
    leakage = coherent_leakage(alpha, cutoff)
    if leakage > LEAKAGE_TOLERANCE:
        raise CutoffTooSmallError(f"cutoff={cutoff} 过小，|α|={abs(alpha):.4g} 的泄漏 {leakage:.3g} > {LEAKAGE_TOLERANCE}")
    amplitudes = coherent_amplitudes(alpha, cutoff) + sign * coherent_amplitudes(-alpha, cutoff)
    if not np.any(amplitudes):
        raise DomainError("α=0 时奇猫态为零向量")
    return FockVector(amplitudes).normalized()


def squeezed_vacuum(r: float, cutoff: int) -> FockVector:
    """
    压缩真空 Σ (-tanh r)^m √((2m)!)/(2^m m!) |2m⟩ / √(cosh r)

    r>0 时压缩的是 x 分量，⟨x²⟩ = e^{-2r}/4。
    """
    cutoff = _check_cutoff(cutoff)
    if not math.isfinite(r):
        raise DomainError(f"压缩参数必须是有限值: {r}")
    amplitudes = np.zeros(cutoff + 1, dtype=complex)
    m = np.arange(cutoff // 2 + 1)
    if r == 0.0:
        amplitudes[0] = 1.0
        return FockVector(amplitudes)
    t = math.tanh(abs(r))
    sign = -1.0 if r > 0 else 1.0
    log_mag = m * math.log(t) + 0.5 * gammaln(2 * m + 1) - m * math.log(2.0) - gammaln(m + 1) - 0.5 * math.log(math.cosh(r))
    amplitudes[2 * m] = np.exp(log_mag) * sign ** m
    vector = FockVector(amplitudes)
    if vector.leakage > LEAKAGE_TOLERANCE:
        raise CutoffTooSmallError(f"cutoff={cutoff} 过小，压缩真空 r={r} 的泄漏 {vector.leakage:.3g} > {LEAKAGE_TOLERANCE}")
    return vector.normalized()
