from typing import Any

import pandas as pd

from glucose_control.bench.config import ExperimentConfig
from glucose_control.bench.management.base import BenchCommand
from glucose_control.bench.report import max_discrepancy, recompute_metrics


class Command(BenchCommand):
    help = "Recompute metrics from the evaluation traces of a finished run and compare them with metrics.csv."

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        out = cfg.output_path
        recomputed = recompute_metrics(out, cfg.metrics_source)
        recomputed.to_csv(out / "report.csv", index=False)
        self.stdout.write(recomputed.to_string(index=False))

        reported_path = out / "metrics.csv"
        if not reported_path.is_file():
            self.stdout.write(self.style.WARNING(f"No {reported_path} to compare against"))
            return
        difference = max_discrepancy(pd.read_csv(reported_path, float_precision="round_trip"), recomputed)
        style = self.style.SUCCESS if difference <= 1e-9 else self.style.WARNING
        self.stdout.write(style(f"Largest difference to metrics.csv: {difference:.3g}"))
