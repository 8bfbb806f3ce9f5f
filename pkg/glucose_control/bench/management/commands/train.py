from pathlib import Path
from typing import Any

from django.core.management.base import CommandParser

from glucose_control.bench.config import ExperimentConfig
from glucose_control.bench.management.base import BenchCommand
from glucose_control.bench.pipeline import read_traces, split_records
from glucose_control.forecaster import dump_records_csv, evaluate_rmse, fit_forecaster


class Command(BenchCommand):
    help = "Train the forecaster on the first 70% of one or more trace CSVs."

    def add_arguments(self, parser: CommandParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--trace", type=Path, action="append", required=True, dest="traces")

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        train_records, _, test_records = split_records(read_traces(options["traces"]))
        settings = cfg.forecaster
        model, history = fit_forecaster(
            train_records, epochs=settings.epochs, lr=settings.lr, batch_size=settings.batch_size, seed=cfg.seeds[0]
        )
        out = cfg.output_path
        out.mkdir(parents=True, exist_ok=True)
        model.save(out / "forecaster.npz")
        dump_records_csv(train_records, out / "train_records.csv")
        self.stdout.write(f"NLL {history.initial:.4f} -> {history.final:.4f} on {len(train_records)} records")
        if test_records:
            self.stdout.write(f"Held-out RMSE {evaluate_rmse(model, test_records):.2f} mg/dL")
        self.stdout.write(self.style.SUCCESS(f"Forecaster written to {out / 'forecaster.npz'}"))
