from django.urls import path

from glucose_control.bench.api.views import ExperimentRunDetailView, ExperimentRunListView, RunMetricsListView

urlpatterns = [
    path("runs/", ExperimentRunListView.as_view(), name="run_list"),
    path("runs/<uuid:uuid>/", ExperimentRunDetailView.as_view(), name="run_detail"),
    path("runs/<uuid:run_uuid>/metrics/", RunMetricsListView.as_view(), name="run_metrics_list"),
]
