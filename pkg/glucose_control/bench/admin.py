from django.contrib import admin

from .models import ExperimentRun, MetricsRecord


class MetricsRecordInline(admin.TabularInline):
    model = MetricsRecord
    extra = 0
    readonly_fields = ("patient", "controller", "seed", "status", "tir", "time_below_70", "time_below_54", "mean_bg")
    fields = readonly_fields


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ("uuid", "kind", "config_hash", "created")
    list_filter = ("kind",)
    search_fields = ("config_hash", "output_dir")
    readonly_fields = ("uuid", "created", "modified")
    inlines = (MetricsRecordInline,)


@admin.register(MetricsRecord)
class MetricsRecordAdmin(admin.ModelAdmin):
    list_display = ("run", "patient", "controller", "seed", "status", "tir", "time_below_70")
    list_filter = ("controller", "status")
    search_fields = ("patient",)
