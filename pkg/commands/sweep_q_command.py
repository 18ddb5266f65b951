import argparse
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List

from channel import integrate_average_fidelity
from report_writer import ReportWriter, base_metadata
from run_config import RunConfig
from sampler import coherent_label
from commands.base_command import BaseCommand, CommandReport
from commands.fidelity_command import coherent_closed_form

SWEEP_HEADER = ["q", "average_fidelity", "closed_form", "boundary_mass", "stderr"]


def parse_q_list(text: str) -> List[float]:
    """解析逗号分隔的 q 列表，空字符串得到空列表"""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析 q 列表: {text}")


class SweepQCommand(BaseCommand):
    """平均保真度随纠缠参数 q 的变化"""

    def __init__(self):
        super().__init__(name="sweep-q", description="对一组 q 计算平均保真度")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--q-list", dest="q_list", type=parse_q_list, help="逗号分隔的 q 值，例如 0,0.25,0.5")

    def row(self, config: RunConfig, psi, q: float) -> list:
        params = config.channel_params(q)
        grid = config.beta_grid(psi, params)
        result = integrate_average_fidelity(psi, params, grid).require_converged(f"q={q} 的平均保真度积分")
        closed_form = coherent_closed_form(q) if coherent_label(psi) is not None else math.nan
        self.logger.debug(f"q={q}: F_av={result.value:.10f}")
        # 求积结果没有统计误差
        return [q, result.value, closed_form, result.boundary_mass, math.nan]

    def run(self, config: RunConfig, writer: ReportWriter) -> CommandReport:
        psi = config.build_state()
        self.logger.info(f"扫描 {len(config.q_list)} 个 q 值，workers={config.workers}")
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as executor:
                rows = list(executor.map(lambda q: self.row(config, psi, q), config.q_list))
        else:
            rows = [self.row(config, psi, q) for q in config.q_list]

        metadata = base_metadata(
            config.config_hash(),
            config.cutoff,
            grid_points=config.points,
            grid_extent="default" if config.extent is None else config.extent,
            max_boundary_mass=max(row[3] for row in rows),
        )
        table = writer.write_table(SWEEP_HEADER, rows, metadata)

        summary = dict(metadata)
        summary.update({
            "command": self.name,
            "state": config.state,
            "q_list": list(config.q_list),
            "average_fidelity": [row[1] for row in rows],
        })
        residuals = [abs(row[1] - row[2]) for row in rows if not math.isnan(row[2])]
        if residuals:
            summary["max_closed_form_residual"] = max(residuals)
        return CommandReport(self.name, summary, [table, writer.write_summary(summary)])
