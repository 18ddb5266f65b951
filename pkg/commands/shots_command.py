import argparse

import numpy as np

from report_writer import ReportWriter, base_metadata
from run_config import RunConfig
from sampler import SHOT_BATCH, chi_square_radial, coherent_label, run_shots_with_stats, summarize
from commands.base_command import BaseCommand, CommandReport

SHOTS_HEADER = ["shot_index", "beta_re", "beta_im", "conditional_fidelity", "weight_at_beta"]
AMPLITUDES_HEADER = ["shot_index", "n", "amplitude_re", "amplitude_im"]


class ShotsCommand(BaseCommand):
    """蒙特卡罗隐形传态事件"""

    def __init__(self):
        super().__init__(name="shots", description="从 P(β) 采样隐形传态事件并汇总条件保真度")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--store-amplitudes", dest="store_amplitudes", action="store_true", default=None,
                            help="同时写出每次事件的输出态振幅")

    def run(self, config: RunConfig, writer: ReportWriter) -> CommandReport:
        psi = config.build_state()
        params = config.channel_params()
        records, acceptance = run_shots_with_stats(psi, params, config.shots, config.sampler_config())
        stats = summarize(records, acceptance)

        metadata = base_metadata(
            config.config_hash(),
            params.cutoff,
            seed=config.seed,
            shots=config.shots,
            shot_batch=SHOT_BATCH,
        )
        paths = [writer.write_table(SHOTS_HEADER, (record.to_row() for record in records), metadata)]
        if config.store_amplitudes:
            rows = [
                [record.shot_index, n, float(value.real), float(value.imag)]
                for record in records
                for n, value in enumerate(record.output.amplitudes)
            ]
            paths.append(writer.write_table(AMPLITUDES_HEADER, rows, metadata, writer.companion_path("amplitudes")))

        betas = np.array([record.beta.value for record in records])
        summary = dict(metadata)
        summary.update({"command": self.name, "state": config.state, "q": params.q})
        summary.update(stats.to_dict())
        summary["beta_variance_re"] = float(np.var(betas.real, ddof=1)) if betas.size > 1 else None
        summary["beta_variance_im"] = float(np.var(betas.imag, ddof=1)) if betas.size > 1 else None

        if coherent_label(psi) is not None:
            statistic, p_value = chi_square_radial(betas, psi, params)
            summary["chi_square"] = {"statistic": statistic, "p_value": p_value, "bins": 20}
            summary["beta_variance_expected"] = 0.5 / (1.0 - params.q * params.q)
            self.logger.info(f"径向卡方检验 p={p_value:.4g}")

        self.logger.info(f"平均条件保真度 {stats.mean_fidelity:.6f} ± {stats.stderr:.2g}")
        paths.append(writer.write_summary(summary))
        return CommandReport(self.name, summary, paths)
