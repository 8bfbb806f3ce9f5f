from typing import Any

from django.core.management.base import CommandParser

from glucose_control.bench.config import ExperimentConfig
from glucose_control.bench.management.base import BenchCommand
from glucose_control.bench.metrics import OK
from glucose_control.bench.models import ExperimentRun
from glucose_control.bench.recording import record_run
from glucose_control.bench.transfer import transfer_scenario


class Command(BenchCommand):
    help = "Train on the source patients' warm-up logs and evaluate, frozen, on the held-out target."

    def add_arguments(self, parser: CommandParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--record", action="store_true", help="Also store the results in the database.")

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        outcome = transfer_scenario(cfg)
        for row in outcome.rows:
            if row.status == OK:
                self.stdout.write(
                    f"seed {row.seed}: TIR {row.tir:.1f}%  <70 {row.time_below_70:.1f}%  "
                    f"<54 {row.time_below_54:.1f}%  mean {row.mean_bg:.1f} mg/dL"
                )
            else:
                self.stdout.write(self.style.WARNING(f"seed {row.seed} failed: {row.error}"))
        if options["record"]:
            run = record_run(ExperimentRun.Kind.TRANSFER, cfg, outcome.rows, str(outcome.output_dir))
            self.stdout.write(f"Recorded run {run.uuid}")
        self.stdout.write(
            self.style.SUCCESS(
                f"Transfer {','.join(outcome.sources)} -> {outcome.target} written to {outcome.output_dir}"
            )
        )
