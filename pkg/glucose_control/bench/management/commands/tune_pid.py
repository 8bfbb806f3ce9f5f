from pathlib import Path
from typing import Any

from django.core.management.base import CommandParser

from glucose_control.baselines import PidConfig, tune_pid
from glucose_control.bench.config import ExperimentConfig
from glucose_control.bench.management.base import BenchCommand
from glucose_control.vpatient import load_cohort

GAIN_KEYS = ("PID_KP", "PID_KI", "PID_KD")


def write_gains(path: Path, gains: PidConfig) -> None:
    """Replace any gain lines of the config file at ``path`` with ``gains``; other lines are kept."""
    kept = []
    if path.is_file():
        kept = [line for line in path.read_text().splitlines() if line.split("=", 1)[0].strip() not in GAIN_KEYS]
    values = (gains.kp, gains.ki, gains.kd)
    path.write_text("\n".join([*kept, *(f"{key}={value!r}" for key, value in zip(GAIN_KEYS, values))]) + "\n")


class Command(BenchCommand):
    help = "Grid-search PID gains on the first configured patient and optionally write them to a config file."

    def add_arguments(self, parser: CommandParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--days", type=float, default=3.0)
        parser.add_argument("--write-config", type=Path, help="Store the best gains in this config file.")

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        patient = cfg.patients[0]
        params = load_cohort([patient], Path(cfg.cohort_dir))[patient]
        best, results = tune_pid(params, days=options["days"], seed=cfg.seeds[0], base=cfg.pid, meals=cfg.meals)
        for result in sorted(results, key=lambda r: -r.tir)[:5]:
            gains = result.config
            self.stdout.write(
                f"kp={gains.kp:g} ki={gains.ki:g} kd={gains.kd:g}: "
                f"TIR {result.tir:.1f}%, <70 {result.time_below_70:.1f}%"
            )
        if options["write_config"]:
            write_gains(options["write_config"], best)
        self.stdout.write(self.style.SUCCESS(f"Best gains for {patient}: kp={best.kp:g} ki={best.ki:g} kd={best.kd:g}"))
