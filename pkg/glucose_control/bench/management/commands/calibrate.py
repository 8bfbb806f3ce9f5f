from pathlib import Path
from typing import Any

from django.core.management.base import CommandParser

from glucose_control.bench.config import ExperimentConfig
from glucose_control.bench.management.base import BenchCommand
from glucose_control.bench.pipeline import dump_residuals_csv, read_traces, split_records
from glucose_control.forecaster import ForecasterModel, residuals
from glucose_control.safegate import calibrate_residuals, empirical_coverage


class Command(BenchCommand):
    help = "Calibrate the conformal quantile on the 70-85% slice of one or more trace CSVs."

    def add_arguments(self, parser: CommandParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--trace", type=Path, action="append", required=True, dest="traces")
        parser.add_argument("--forecaster", type=Path, required=True, help="Checkpoint written by `train`.")

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        _, calibration_records, test_records = split_records(read_traces(options["traces"]))
        model = ForecasterModel.load(options["forecaster"])
        abs_residuals = residuals(model, calibration_records)
        calibration = calibrate_residuals(abs_residuals, cfg.safety.alpha, cfg.safety.per_step)

        out = cfg.output_path
        out.mkdir(parents=True, exist_ok=True)
        dump_residuals_csv(abs_residuals, out / "residuals.csv")
        self.stdout.write(f"q_alpha {calibration.summary:.2f} mg/dL from {calibration.n_calibration} records")
        if test_records:
            coverage = empirical_coverage(calibration, residuals(model, test_records))
            self.stdout.write(f"Held-out coverage {coverage:.3f} (target {1 - cfg.safety.alpha:.2f})")
        self.stdout.write(self.style.SUCCESS(f"Residuals written to {out / 'residuals.csv'}"))
