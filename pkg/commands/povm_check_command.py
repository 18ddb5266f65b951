import math

from channel import identity_deviation, integrated_transfer_square, reference_povm_completeness
from fock_core import number_state
from quad import default_extent, make_grid
from report_writer import ReportWriter, base_metadata
from run_config import RunConfig
from commands.base_command import BaseCommand, CommandReport

POVM_HEADER = ["reference", "interior_dimension", "max_deviation"]
POVM_TOLERANCE = 1e-6


def completeness_extent(interior: int) -> float:
    """覆盖 n ≤ interior 的位移光子数态的网格半宽"""
    return 2.0 * math.sqrt(interior + 1) + 4.0


class PovmCheckCommand(BaseCommand):
    """
    检查以已知参考态构成的测量基的完备性，
    以及 ∫T²(β)d²β 在内部子空间上等于单位算符
    """

    def __init__(self):
        super().__init__(name="povm-check", description="检查测量基完备性与信道保迹")

    def run(self, config: RunConfig, writer: ReportWriter) -> CommandReport:
        params = config.channel_params()
        interior = params.cutoff // 2
        extent = config.extent or completeness_extent(interior)
        grid = make_grid(0j, extent, config.points)
        self.logger.info(f"内部子空间 n ≤ {interior}，网格半宽 {extent:.4g}，每轴 {config.points} 点")

        rows = []
        for label, n in (("vacuum", 0), ("number-1", 1)):
            reference = number_state(n, params.cutoff)
            deviation = identity_deviation(reference_povm_completeness(reference, grid, interior), interior)
            self.logger.info(f"参考态 {label}: 偏差 {deviation:.3g}")
            rows.append([label, interior + 1, deviation])

        transfer_extent = config.extent or max(extent, default_extent(params.q, 0j, math.sqrt(interior + 1)))
        transfer_grid = make_grid(0j, transfer_extent, config.points)
        deviation = identity_deviation(integrated_transfer_square(params, transfer_grid, interior), interior)
        self.logger.info(f"∫T² 偏差 {deviation:.3g} (q={params.q})")
        rows.append(["transfer-square", interior + 1, deviation])

        metadata = base_metadata(
            config.config_hash(),
            params.cutoff,
            interior_max_index=interior,
            grid_extent=extent,
            transfer_grid_extent=transfer_extent,
            grid_points=config.points,
        )
        table = writer.write_table(POVM_HEADER, rows, metadata)
        summary = dict(metadata)
        summary.update({
            "command": self.name,
            "q": params.q,
            "interior_dimension": interior + 1,
            "deviations": {row[0]: row[2] for row in rows},
            "passed": all(row[2] < POVM_TOLERANCE for row in rows),
        })
        return CommandReport(self.name, summary, [table, writer.write_summary(summary)])
