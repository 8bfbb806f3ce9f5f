from uuid import UUID

from django.db.models import QuerySet
from django.http import Http404

from drf_spectacular.types import OpenApiTypes
from drf_spectacular.utils import extend_schema, extend_schema_view
from rest_framework import status
from rest_framework.generics import GenericAPIView, ListAPIView

from ..models import ExperimentRun, MetricsRecord
from .mixins import ListViewMixin, RetrieveViewMixin
from .schema_utils import METRICS_RESPONSE, RUN_NOT_FOUND_RESPONSE, RUN_RESPONSE
from .serializers import ExperimentRunSerializer, MetricsRecordSerializer


class ExperimentRunView(GenericAPIView):

    serializer_class = ExperimentRunSerializer

    def get_queryset(self) -> QuerySet[ExperimentRun]:
        return ExperimentRun.objects.prefetch_related("metrics")


@extend_schema_view(
    get=extend_schema(
        examples=[
            RUN_RESPONSE,
        ],
    ),
)
class ExperimentRunListView(ExperimentRunView, ListViewMixin):
    """View for listing recorded runs, newest first."""


@extend_schema_view(
    get=extend_schema(
        responses={
            status.HTTP_404_NOT_FOUND: OpenApiTypes.OBJECT,
            status.HTTP_200_OK: ExperimentRunSerializer,
        },
        examples=[
            RUN_NOT_FOUND_RESPONSE,
            RUN_RESPONSE,
        ],
    ),
)
class ExperimentRunDetailView(ExperimentRunView, RetrieveViewMixin):
    """View for retrieving a run by its UUID."""

    lookup_field = "uuid"


@extend_schema_view(
    get=extend_schema(
        responses={
            status.HTTP_404_NOT_FOUND: OpenApiTypes.OBJECT,
            status.HTTP_200_OK: MetricsRecordSerializer(many=True),
        },
        examples=[
            RUN_NOT_FOUND_RESPONSE,
            METRICS_RESPONSE,
        ],
    ),
)
class RunMetricsListView(ListAPIView):
    """View for listing the per-cell metrics of one run."""

    serializer_class = MetricsRecordSerializer

    def get_queryset(self) -> QuerySet[MetricsRecord]:
        """
        Filter metrics on the run given in the URL; optionally on `controller` and `patient` query parameters.

        :raise Http404: if there is no run with given UUID
        """
        run_uuid: UUID = self.kwargs["run_uuid"]
        try:
            run = ExperimentRun.objects.get(uuid=run_uuid)
        except ExperimentRun.DoesNotExist as error:
            raise Http404(f"ExperimentRun with UUID '{run_uuid}' does not exist.") from error

        queryset = run.metrics.all()
        for name in ("controller", "patient"):
            value = self.request.query_params.get(name)
            if value:
                queryset = queryset.filter(**{name: value})
        return queryset
