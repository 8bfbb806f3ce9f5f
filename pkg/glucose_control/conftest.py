import functools
from typing import Any, Callable, TypeAlias

from django.apps import apps
from django.contrib.auth.models import User
from django.db.models import ForeignObjectRel, Model
from django.urls import resolve, reverse

import pytest

from glucose_control.bench.tests.factories import UserFactory
from glucose_control.vpatient import PatientParams

SERIALIZED_QUERYSET: TypeAlias = tuple[dict[str, Any], ...]


@pytest.fixture
def adult_params() -> PatientParams:
    """Default adult: equilibrium at 180 mg/dL with basal 1 U/h and ICR 20 g/U."""
    return PatientParams()


@pytest.fixture(autouse=True)
def output_dir(settings, tmp_path):
    settings.GLUCOSE_CONTROL_OUTPUT_DIR = tmp_path / "runs"
    settings.GLUCOSE_CONTROL_COHORT_DIR = tmp_path / "cohort"
    return settings.GLUCOSE_CONTROL_OUTPUT_DIR


@pytest.fixture
def user(db) -> User:
    return UserFactory()


def serialize_queryset(model_class: type[Model]) -> SERIALIZED_QUERYSET:
    """Serialize every row of ``model_class``, skipping backward relationships."""
    return tuple(
        {
            field.name: field.value_from_object(obj)  # type: ignore
            for field in model_class._meta.get_fields()
            if not isinstance(field, ForeignObjectRel)
        }
        for obj in model_class.objects.all()
    )


def assert_database_state_unchanged(func: Callable):
    """Decorator for tests to ensure that the state of the database remains the same at the end of test execution."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        initial = tuple(serialize_queryset(model_class) for model_class in apps.get_models())
        result = func(*args, **kwargs)
        eventual = tuple(serialize_queryset(model_class) for model_class in apps.get_models())
        for initial_queryset, eventual_queryset in zip(initial, eventual):
            assert initial_queryset == eventual_queryset
        return result

    return wrapper


def assert_view_name_matches_url(view_name: str, url: str, **kwargs):
    full_url = url.format(**kwargs)
    assert reverse(view_name, kwargs=kwargs) == full_url
    assert resolve(full_url).view_name == view_name
