from pathlib import Path
from typing import Any

from django.core.management.base import CommandParser

from slugify import slugify

from glucose_control.bench.config import ExperimentConfig
from glucose_control.bench.management.base import BenchCommand
from glucose_control.bench.metrics import metrics
from glucose_control.bench.pipeline import build_controller, episode_options, load_calibration
from glucose_control.forecaster import ForecasterModel
from glucose_control.looprt import TsodeController, run_episode, write_trace_csv
from glucose_control.tspolicy import Mode, load_table_csv
from glucose_control.vpatient import load_cohort


class Command(BenchCommand):
    help = "Simulate one episode of the first configured patient under the first configured controller."

    def add_arguments(self, parser: CommandParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--days", type=float, default=1.0)
        parser.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EXPLORE.value)
        parser.add_argument("--table", type=Path, help="Policy table CSV to start from.")
        parser.add_argument("--forecaster", type=Path, help="Forecaster checkpoint (.npz) for the TSODE gate.")
        parser.add_argument("--residuals", type=Path, help="Calibration residual CSV for the TSODE gate.")

    def run(self, cfg: ExperimentConfig, options: dict[str, Any]) -> None:
        patient, name, seed = cfg.patients[0], cfg.controllers[0], cfg.seeds[0]
        params = load_cohort([patient], Path(cfg.cohort_dir))[patient]
        controller = build_controller(name, params, cfg)
        if options["table"] and getattr(controller, "table", None) is not None:
            controller.table = load_table_csv(options["table"], cfg.prior_mean, cfg.prior_var)
        if options["forecaster"] and isinstance(controller, TsodeController):
            controller.forecaster = ForecasterModel.load(options["forecaster"])
        if options["residuals"] and isinstance(controller, TsodeController):
            controller.calibration = load_calibration(options["residuals"], cfg.safety.alpha, cfg.safety.per_step)

        result = run_episode(params, controller, options["days"], seed, options["mode"], **episode_options(cfg))
        phase = options["mode"]
        path = cfg.output_path / "traces" / f"{slugify(patient)}_{name}_seed{seed}_{phase}.csv"
        metadata = {"patient": patient, "controller": name, "seed": seed, "phase": phase, "dt": cfg.dt}
        write_trace_csv(result.records, path, {**metadata, "fault": result.fault})
        if not result.completed:
            self.stdout.write(self.style.WARNING(f"Episode stopped early: {result.fault}"))
        row = metrics([r.bg_true for r in result.records], patient, name, seed, cfg.dt)
        self.stdout.write(
            self.style.SUCCESS(
                f"{len(result.records)} steps written to {path}: TIR {row.tir:.1f}%, <70 {row.time_below_70:.1f}%, "
                f"mean {row.mean_bg:.1f} mg/dL"
            )
        )
