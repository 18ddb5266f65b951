import argparse
import math

import numpy as np

from channel import output_density_matrix
from report_writer import ReportWriter, base_metadata
from run_config import RunConfig
from sampler import coherent_label
from verify import (
    BasisKind,
    check_completeness,
    default_alpha_grid,
    default_homodyne_nodes,
    eight_port_distribution,
    eight_port_distribution_from_density,
    homodyne_distribution,
    homodyne_distribution_from_density,
    make_basis,
    q_function_moments,
    quadrature_statistics,
    sample_joint,
)
from commands.base_command import BaseCommand, CommandReport

HOMODYNE_HEADER = ["x", "input_density", "output_density"]
NUMBER_HEADER = ["n", "input_probability", "output_probability"]
EIGHT_PORT_HEADER = ["alpha_re", "alpha_im", "input_q", "output_q"]
GAMMA_HEADER = ["draw", "beta_re", "beta_im", "alpha_re", "alpha_im", "gamma_re", "gamma_im"]


def teleported_coherent_variance(q: float) -> float:
    """相干态系综输出的零差方差 1/4 + (1-q)/(2(1+q))"""
    return 0.25 + (1.0 - q) / (2.0 * (1.0 + q))


class VerifyCommand(BaseCommand):
    """对输入态与传态后系综做同一验证测量并比较分布"""

    def __init__(self):
        super().__init__(name="verify", description="比较输入态与传态系综在验证测量下的分布")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--basis", choices=[kind.value for kind in BasisKind], help="验证测量类型")

    def run(self, config: RunConfig, writer: ReportWriter) -> CommandReport:
        psi = config.build_state()
        params = config.channel_params()
        grid = config.beta_grid(psi, params)
        kind = BasisKind(config.basis)
        self.logger.info(f"验证测量 {kind.value}: state={config.state}, q={params.q}")
        rho = output_density_matrix(psi, params, grid)

        metadata = base_metadata(
            config.config_hash(),
            params.cutoff,
            basis=kind.value,
            grid_center_re=grid.center.re,
            grid_center_im=grid.center.im,
            grid_extent=grid.extent,
            grid_points=grid.points_per_axis,
        )
        summary = {"command": self.name, "state": config.state, "q": params.q, "output_trace": rho.trace().real}

        if kind is BasisKind.NUMBER:
            paths = self._number(psi, rho, writer, metadata, summary)
        elif kind is BasisKind.EIGHT_PORT:
            paths = self._eight_port(config, psi, params, rho, writer, metadata, summary)
        else:
            paths = self._homodyne(kind, psi, params, rho, writer, metadata, summary)

        summary.update(metadata)
        paths.append(writer.write_summary(summary))
        return CommandReport(self.name, summary, paths)

    def _number(self, psi, rho, writer, metadata, summary) -> list:
        basis = make_basis(BasisKind.NUMBER, psi.cutoff)
        metadata["completeness_deviation"] = check_completeness(basis)
        input_probabilities = np.abs(np.conj(basis.vectors) @ psi.amplitudes) ** 2
        output_probabilities = np.einsum("vm,mn,vn->v", np.conj(basis.vectors), rho.entries, basis.vectors).real
        rows = [[n, input_probabilities[n], output_probabilities[n]] for n in range(psi.cutoff + 1)]
        summary["input_mean_photon_number"] = float(np.arange(psi.cutoff + 1) @ input_probabilities)
        summary["output_mean_photon_number"] = float(np.arange(psi.cutoff + 1) @ output_probabilities)
        return [writer.write_table(NUMBER_HEADER, rows, metadata)]

    def _homodyne(self, kind, psi, params, rho, writer, metadata, summary) -> list:
        mean_in, std_in = quadrature_statistics(psi, kind)
        _, std_out = quadrature_statistics(rho, kind)
        nodes = default_homodyne_nodes(mean_in, max(std_in, std_out), params.cutoff)
        deviation = check_completeness(make_basis(kind, params.cutoff, x_nodes=nodes))
        self.logger.info(f"零差基完备性偏差 {deviation:.3g}")

        before = homodyne_distribution(psi, nodes, kind)
        after = homodyne_distribution_from_density(rho, nodes, kind)
        metadata["completeness_deviation"] = deviation
        metadata["homodyne_boundary_mass"] = max(before.boundary_mass, after.boundary_mass)

        summary.update({
            "input_mean": before.mean().real,
            "input_variance": before.variance(),
            "output_mean": after.mean().real,
            "output_variance": after.variance(),
            "input_mass": before.mass,
            "output_mass": after.mass,
        })
        if coherent_label(psi) is not None:
            summary["output_variance_expected"] = teleported_coherent_variance(params.q)
        rows = zip(nodes, before.values, after.values)
        return [writer.write_table(HOMODYNE_HEADER, rows, metadata)]

    def _eight_port(self, config, psi, params, rho, writer, metadata, summary) -> list:
        alpha_grid = default_alpha_grid(psi, params, config.points)
        deviation = check_completeness(make_basis(BasisKind.EIGHT_PORT, params.cutoff, alpha_grid=alpha_grid))
        self.logger.info(f"八端口零差基完备性偏差 {deviation:.3g}")

        before = eight_port_distribution(psi, alpha_grid)
        after = eight_port_distribution_from_density(rho, alpha_grid)
        metadata["completeness_deviation"] = deviation
        metadata["alpha_grid_extent"] = alpha_grid.extent
        metadata["alpha_boundary_mass"] = max(before.boundary_mass, after.boundary_mass)
        rows = [
            [float(alpha.real), float(alpha.imag), q_in, q_out]
            for alpha, q_in, q_out in zip(alpha_grid.nodes, before.values, after.values)
        ]
        paths = [writer.write_table(EIGHT_PORT_HEADER, rows, metadata)]

        # 两步测量: 传态结果 β 与验证结果 α 重建 γ
        sample = sample_joint(psi, params, config.shots, config.sampler_config())
        gamma_rows = [
            [index, float(b.real), float(b.imag), float(a.real), float(a.imag), float(g.real), float(g.imag)]
            for index, (b, a, g) in enumerate(zip(sample.betas, sample.alphas, sample.gammas))
        ]
        gamma_metadata = dict(metadata, seed=config.seed, draws=config.shots)
        paths.append(writer.write_table(GAMMA_HEADER, gamma_rows, gamma_metadata, writer.companion_path("gamma")))

        q_mean, q_covariance = q_function_moments(psi)
        points = np.column_stack([sample.gammas.real, sample.gammas.imag])
        gamma_mean = points.mean(axis=0)
        gamma_covariance = np.cov(points, rowvar=False) if len(points) > 1 else np.full((2, 2), math.nan)
        summary.update({
            "draws": config.shots,
            "gamma_mean": gamma_mean.tolist(),
            "gamma_mean_stderr": np.sqrt(np.diag(gamma_covariance) / len(points)).tolist(),
            "gamma_covariance": gamma_covariance.tolist(),
            "q_function_mean": [q_mean.real, q_mean.imag],
            "q_function_covariance": q_covariance.tolist(),
            "input_q_mass": before.mass,
            "output_q_mass": after.mass,
        })
        return paths
