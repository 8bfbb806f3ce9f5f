from typing import Any

from django.core.management.base import CommandParser

from glucose_control.bench.config import ExperimentConfig
from glucose_control.bench.experiment import run_experiment
from glucose_control.bench.management.base import BenchCommand
from glucose_control.bench.metrics import cohort_means
from glucose_control.bench.models import ExperimentRun
from glucose_control.bench.recording import record_run


class Command(BenchCommand):
    help = "Run the warm-up/evaluation protocol over every configured patient, controller and seed."

    def add_arguments(self, parser: CommandParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--record", action="store_true", help="Also store the results in the database.")

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        outcome = run_experiment(cfg)
        failed = [r for r in outcome.results if r.failed]
        for result in failed:
            self.stdout.write(self.style.WARNING(f"{result.cell.slug} failed: {result.row.error}"))
        summary = cohort_means(outcome.rows)
        columns = ["controller", "cohort", "tir", "time_below_70", "time_below_54", "mean_bg", "n_failed"]
        self.stdout.write(summary[columns].to_string(index=False, float_format="%.2f"))
        if options["record"]:
            run = record_run(ExperimentRun.Kind.RUN, cfg, outcome.rows, str(outcome.output_dir))
            self.stdout.write(f"Recorded run {run.uuid}")
        self.stdout.write(
            self.style.SUCCESS(
                f"{len(outcome.results) - len(failed)}/{len(outcome.results)} cells finished; "
                f"reports in {outcome.output_dir}"
            )
        )
