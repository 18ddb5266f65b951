import argparse
import math

import numpy as np

from config import UNDERFLOW_THRESHOLD
from channel import fidelity_terms, integrate_average_fidelity
from fock_core import coherent_centroid
from report_writer import ReportWriter, base_metadata
from run_config import RunConfig
from sampler import coherent_label
from commands.base_command import BaseCommand, CommandReport

FIDELITY_HEADER = ["beta_re", "beta_im", "probability", "conditional_fidelity"]


def coherent_closed_form(q: float) -> float:
    """相干态输入的平均保真度 (1+q)/2"""
    return (1.0 + q) / 2.0


class FidelityCommand(BaseCommand):
    """平均保真度与沿 β 射线的 P(β)、F(β) 表"""

    def __init__(self):
        super().__init__(name="fidelity", description="计算平均保真度并输出沿射线的 P(β) 与 F(β)")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--ray-angle", dest="ray_angle", type=float, help="射线方向角 (弧度)")
        parser.add_argument("--ray-max", dest="ray_max", type=float, help="射线长度")
        parser.add_argument("--ray-points", dest="ray_points", type=int, help="射线上的点数")

    def ray_rows(self, config: RunConfig, psi, params) -> list:
        """从输入态相干质心出发的 β 射线"""
        center = coherent_centroid(psi)
        steps = np.linspace(0.0, config.ray_max, config.ray_points)
        betas = center + steps * np.exp(1j * config.ray_angle)
        probabilities, diagonal = fidelity_terms(psi, betas, params)
        rows = []
        for beta, probability, overlap in zip(betas, probabilities, diagonal):
            if probability < UNDERFLOW_THRESHOLD:
                fidelity = math.nan
            else:
                fidelity = min(1.0, max(0.0, float(overlap * overlap / probability)))
            rows.append([float(beta.real), float(beta.imag), float(probability), fidelity])
        return rows

    def run(self, config: RunConfig, writer: ReportWriter) -> CommandReport:
        psi = config.build_state()
        params = config.channel_params()
        grid = config.beta_grid(psi, params)
        self.logger.info(f"计算平均保真度: state={config.state}, q={params.q}, cutoff={params.cutoff}, 网格 {grid.points_per_axis}²")

        result = integrate_average_fidelity(psi, params, grid).require_converged("平均保真度积分")
        closed_form = coherent_closed_form(params.q) if coherent_label(psi) is not None else None

        metadata = base_metadata(
            config.config_hash(),
            params.cutoff,
            grid_center_re=grid.center.re,
            grid_center_im=grid.center.im,
            grid_extent=grid.extent,
            grid_points=grid.points_per_axis,
            boundary_mass=result.boundary_mass,
        )
        table = writer.write_table(FIDELITY_HEADER, self.ray_rows(config, psi, params), metadata)

        summary = dict(metadata)
        summary.update({
            "command": self.name,
            "state": config.state,
            "q": params.q,
            "average_fidelity": result.value,
            "closed_form": closed_form,
            "converged": result.converged,
        })
        if closed_form is not None:
            summary["closed_form_residual"] = abs(result.value - closed_form)
        self.logger.info(f"F_av = {result.value:.10f}，边界质量 {result.boundary_mass:.3g}")
        return CommandReport(self.name, summary, [table, writer.write_summary(summary)])
