import os
from dotenv import load_dotenv

# 加载环境变量
load_dotenv()

# 输出配置 (唯一从环境变量读取的设置)
OUTPUT_DIR = os.getenv("CVTELE_OUTPUT_DIR", "output")

# 信道默认参数
DEFAULT_Q = 0.5
DEFAULT_CUTOFF = 40
MAX_Q_DEFAULT = 0.95            # 超过该值需显式 --allow-high-q
HIGH_Q_OCCUPATION_FACTOR = 10   # 高 q 时要求 cutoff >= 10 × q²/(1-q²)

# 积分网格默认参数
DEFAULT_POINTS_PER_AXIS = 101
BOUNDARY_MASS_TOLERANCE = 1e-8

# 采样默认参数
DEFAULT_SEED = 20010101
DEFAULT_SHOTS = 1000
MAX_REJECTIONS_PER_DRAW = 1_000_000
RNG_VERSION_TAG = "numpy-PCG64-seedsequence-v1"

# 数值阈值
UNDERFLOW_THRESHOLD = 1e-300
NORMALIZATION_TOLERANCE = 1e-10
LEAKAGE_TOLERANCE = 1e-6
COMPLETENESS_TOLERANCE = 1e-4

# 验证测量默认参数
HOMODYNE_POINTS = 801
HOMODYNE_WIDTH_SIGMAS = 8.0

# 输出格式
CSV_FLOAT_DIGITS = 17
SCHEMA_VERSION = "1"
