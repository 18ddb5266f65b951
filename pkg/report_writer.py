"""
结果输出
CSV 表格以 # 开头的元数据行起始，浮点数使用 17 位有效数字，不写时间戳，相同配置重跑时逐字节一致
"""

import csv
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import CSV_FLOAT_DIGITS, OUTPUT_DIR, RNG_VERSION_TAG, SCHEMA_VERSION

logger = logging.getLogger("report_writer")


def format_value(value: Any) -> str:
    """CSV 单元格格式"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{CSV_FLOAT_DIGITS}g")
    if value is None:
        return ""
    return str(value)


def to_jsonable(value: Any) -> Any:
    """numpy 标量转为内置类型，非有限浮点数写为 null"""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    return value


def base_metadata(config_hash: str, cutoff: int, **extra: Any) -> Dict[str, Any]:
    """每个输出文件都携带的元数据"""
    metadata = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config_hash,
        "rng_version": RNG_VERSION_TAG,
        "cutoff": cutoff,
    }
    metadata.update(extra)
    return metadata


class ReportWriter:
    """把命令结果写成 CSV/JSON 表格与摘要文件"""

    def __init__(self, out: Optional[str], command: str, fmt: str = "csv"):
        """
        Args:
            out: 表格输出路径，为空时写到 OUTPUT_DIR/<command>.<fmt>
            command: 子命令名称
            fmt: csv 或 json
        """
        self.format = fmt
        self.table_path = out or os.path.join(OUTPUT_DIR, f"{command}.{fmt}")
        self.stem = os.path.splitext(self.table_path)[0]

    @property
    def summary_path(self) -> str:
        return f"{self.stem}.summary.json"

    def companion_path(self, suffix: str) -> str:
        """与主表同名的附加表格路径，例如 <stem>.gamma.csv"""
        return f"{self.stem}.{suffix}.{self.format}"

    def _ensure_dir(self, path: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)

    def write_table(
        self,
        header: Sequence[str],
        rows: Iterable[Sequence[Any]],
        metadata: Dict[str, Any],
        path: Optional[str] = None,
    ) -> str:
        """
        写出一张表格

        Returns:
            实际写入的路径
        """
        path = path or self.table_path
        self._ensure_dir(path)
        rows = [list(row) for row in rows]
        with open(path, "w", encoding="utf-8", newline="") as f:
            if self.format == "csv":
                for key in sorted(metadata):
                    f.write(f"# {key}={format_value(metadata[key])}\n")
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_value(value) for value in row])
            else:
                document = {
                    "metadata": to_jsonable(metadata),
                    "columns": list(header),
                    "rows": to_jsonable(rows),
                }
                json.dump(document, f, ensure_ascii=False, indent=2, sort_keys=True)
                f.write("\n")
        logger.info(f"已写入 {len(rows)} 行到 {path}")
        return path

    def write_summary(self, summary: Dict[str, Any]) -> str:
        self._ensure_dir(self.summary_path)
        with open(self.summary_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(to_jsonable(summary), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"摘要已写入 {self.summary_path}")
        return self.summary_path


def read_metadata(path: str) -> Dict[str, str]:
    """读取 CSV 头部的 # 元数据行"""
    metadata = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition("=")
            metadata[key] = value
    return metadata


def read_rows(path: str) -> List[Dict[str, str]]:
    """读取 CSV 数据行 (跳过元数据)"""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))
