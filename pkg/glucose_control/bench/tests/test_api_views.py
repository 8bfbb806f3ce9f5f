from uuid import uuid4

import pytest
from rest_framework import status
from rest_framework.response import Response
from rest_framework.test import APIClient

from glucose_control.bench.models import ExperimentRun
from glucose_control.conftest import assert_database_state_unchanged

from .test_api_urls import RUN_DETAIL_ENDPOINT, RUN_LIST_ENDPOINT, RUN_METRICS_LIST_ENDPOINT

pytestmark = pytest.mark.django_db

api_client = APIClient()


class TestExperimentRunListView:

    @assert_database_state_unchanged
    def test_get_is_not_accessible_by_anonymous_users(self, experiment_run: ExperimentRun):
        api_client.force_authenticate(user=None)
        response = api_client.get(RUN_LIST_ENDPOINT)
        assert response.status_code == status.HTTP_403_FORBIDDEN

    @assert_database_state_unchanged
    def test_get_lists_newest_run_first(self, user, experiment_run: ExperimentRun, other_run: ExperimentRun):
        api_client.force_authenticate(user=user)
        response: Response = api_client.get(RUN_LIST_ENDPOINT)

        assert response.status_code == status.HTTP_200_OK
        assert [item["uuid"] for item in response.data] == [str(other_run.uuid), str(experiment_run.uuid)]
        assert [item["n_cells"] for item in response.data] == [1, 3]
        assert response.data[0]["kind"] == "transfer"

    def test_post_is_not_allowed(self, user):
        api_client.force_authenticate(user=user)
        response = api_client.post(RUN_LIST_ENDPOINT, data={"kind": "run"})
        assert response.status_code == status.HTTP_405_METHOD_NOT_ALLOWED
        assert not ExperimentRun.objects.exists()


class TestExperimentRunDetailView:

    @assert_database_state_unchanged
    def test_get_is_not_accessible_by_anonymous_users(self, experiment_run: ExperimentRun):
        api_client.force_authenticate(user=None)
        response = api_client.get(RUN_DETAIL_ENDPOINT.format(uuid=experiment_run.uuid))
        assert response.status_code == status.HTTP_403_FORBIDDEN

    @assert_database_state_unchanged
    def test_get_for_authenticated_user(self, user, experiment_run: ExperimentRun):
        api_client.force_authenticate(user=user)
        response: Response = api_client.get(RUN_DETAIL_ENDPOINT.format(uuid=experiment_run.uuid))

        assert response.status_code == status.HTTP_200_OK
        assert response.data["uuid"] == str(experiment_run.uuid)
        assert response.data["config_hash"] == experiment_run.config_hash
        assert response.data["config"] == experiment_run.config
        assert response.data["n_cells"] == 3

    @assert_database_state_unchanged
    def test_get_non_existent_run(self, user, experiment_run: ExperimentRun):
        api_client.force_authenticate(user=user)
        response = api_client.get(RUN_DETAIL_ENDPOINT.format(uuid=uuid4()))
        assert response.status_code == status.HTTP_404_NOT_FOUND


class TestRunMetricsListView:

    @assert_database_state_unchanged
    def test_get_is_not_accessible_by_anonymous_users(self, experiment_run: ExperimentRun):
        api_client.force_authenticate(user=None)
        response = api_client.get(RUN_METRICS_LIST_ENDPOINT.format(run_uuid=experiment_run.uuid))
        assert response.status_code == status.HTTP_403_FORBIDDEN

    @assert_database_state_unchanged
    def test_get_lists_only_the_runs_cells(self, user, experiment_run: ExperimentRun, other_run: ExperimentRun):
        api_client.force_authenticate(user=user)
        response: Response = api_client.get(RUN_METRICS_LIST_ENDPOINT.format(run_uuid=experiment_run.uuid))

        assert response.status_code == status.HTTP_200_OK
        cells = [(item["patient"], item["controller"], item["status"]) for item in response.data]
        assert cells == [
            ("adult#001", "pid", "ok"),
            ("adult#001", "tsode", "ok"),
            ("adult#002", "tsode", "failed"),
        ]
        assert response.data[1]["tir"] == 80.25
        assert response.data[2]["tir"] is None
        assert response.data[2]["error"].startswith("evaluation stopped early")

    @pytest.mark.parametrize(
        "query, expected",
        (
            ({"controller": "tsode"}, [("adult#001", "tsode"), ("adult#002", "tsode")]),
            ({"patient": "adult#001"}, [("adult#001", "pid"), ("adult#001", "tsode")]),
            ({"controller": "tsode", "patient": "adult#002"}, [("adult#002", "tsode")]),
            ({"controller": "mealbolus"}, []),
        ),
    )
    @assert_database_state_unchanged
    def test_get_filters(self, user, experiment_run: ExperimentRun, query, expected):
        api_client.force_authenticate(user=user)
        response: Response = api_client.get(RUN_METRICS_LIST_ENDPOINT.format(run_uuid=experiment_run.uuid), query)

        assert response.status_code == status.HTTP_200_OK
        assert [(item["patient"], item["controller"]) for item in response.data] == expected

    @assert_database_state_unchanged
    def test_get_non_existent_run(self, user, experiment_run: ExperimentRun):
        api_client.force_authenticate(user=user)
        response = api_client.get(RUN_METRICS_LIST_ENDPOINT.format(run_uuid=uuid4()))

        assert response.status_code == status.HTTP_404_NOT_FOUND
        assert "does not exist" in response.data["detail"]
