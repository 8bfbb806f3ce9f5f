from pathlib import Path
from typing import Any

from django.core.management.base import BaseCommand, CommandError, CommandParser

from glucose_control.bench.config import CONTROLLERS, ExperimentConfig, load_experiment_config
from glucose_control.utils.exceptions import GlucoseControlError


class BenchCommand(BaseCommand):
    """
    Shared flags of the bench commands.

    Subclasses implement :meth:`run` instead of ``handle``; project faults surface as ``CommandError``.
    """

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("--config", type=Path, help="Experiment config file (KEY=value lines).")
        parser.add_argument("--seed", type=int, action="append", dest="seeds", help="Seed; repeat for several.")
        parser.add_argument("--out", type=Path, help="Output directory.")
        parser.add_argument("--workers", type=int, help="Parallel sweep cells.")
        parser.add_argument(
            "--controller", action="append", dest="controllers", choices=CONTROLLERS, help="Repeat for several."
        )
        parser.add_argument("--patient", action="append", dest="patients", help="Patient id; repeat for several.")

    def load_config(self, options: dict[str, Any]) -> ExperimentConfig:
        return load_experiment_config(
            options.get("config"),
            seeds=options.get("seeds"),
            output_dir=str(options["out"]) if options.get("out") else None,
            workers=options.get("workers"),
            controllers=options.get("controllers"),
            patients=options.get("patients"),
        )

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            self.run(self.load_config(options), options)
        except GlucoseControlError as error:
            errors = getattr(error, "errors", None)
            raise CommandError(f"{error}" + (f"\n{errors}" if errors else "")) from error

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        raise NotImplementedError
