from rest_framework import serializers

from ..models import ExperimentRun, MetricsRecord


class MetricsRecordSerializer(serializers.ModelSerializer):

    class Meta:
        model = MetricsRecord
        fields = (
            "patient", "controller", "seed", "status", "tir", "time_below_70", "time_below_54", "time_above_180",
            "mean_bg", "eval_days", "error",
        )
        read_only_fields = fields


class ExperimentRunSerializer(serializers.ModelSerializer):
    """Run summary; the per-cell metrics are listed under their own endpoint."""

    n_cells = serializers.IntegerField(source="metrics.count", read_only=True)

    class Meta:
        model = ExperimentRun
        fields = ("uuid", "kind", "config_hash", "config", "output_dir", "n_cells", "created", "modified")
        read_only_fields = fields
