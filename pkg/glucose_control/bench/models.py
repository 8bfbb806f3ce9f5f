import uuid

from django.db import models
from django.utils.translation import gettext_lazy as _

from model_utils.models import TimeStampedModel


class ExperimentRun(TimeStampedModel):
    """A finished sweep or transfer scenario; the files under ``output_dir`` remain the source of truth."""

    class Kind(models.TextChoices):
        RUN = "run", _("Sweep")
        TRANSFER = "transfer", _("Transfer")

    uuid = models.UUIDField(default=uuid.uuid4, editable=False, unique=True)
    kind = models.CharField(max_length=16, choices=Kind.choices, default=Kind.RUN)
    config_hash = models.CharField(max_length=64, db_index=True)
    config = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=1024)

    class Meta:
        ordering = ("-created",)

    def __str__(self):
        return f"{self.kind} {self.config_hash[:12]}"


class MetricsRecord(models.Model):
    """Outcome of one (patient, controller, seed) cell of a run."""

    class Status(models.TextChoices):
        OK = "ok", _("OK")
        FAILED = "failed", _("Failed")

    run = models.ForeignKey(
        ExperimentRun, on_delete=models.CASCADE, related_name="metrics", related_query_name="metric"
    )
    patient = models.CharField(max_length=63)
    controller = models.CharField(max_length=31)
    seed = models.PositiveIntegerField()
    status = models.CharField(max_length=16, choices=Status.choices, default=Status.OK)
    tir = models.FloatField(null=True, blank=True)
    time_below_70 = models.FloatField(null=True, blank=True)
    time_below_54 = models.FloatField(null=True, blank=True)
    time_above_180 = models.FloatField(null=True, blank=True)
    mean_bg = models.FloatField(null=True, blank=True)
    eval_days = models.FloatField(null=True, blank=True)
    error = models.TextField(blank=True, default="")

    class Meta:
        ordering = ("patient", "controller", "seed")
        constraints = [
            models.UniqueConstraint(fields=("run", "patient", "controller", "seed"), name="unique_cell_per_run"),
        ]

    def __str__(self):
        return f"{self.patient}/{self.controller}/seed {self.seed}"
