from collections.abc import Iterable

from django.core.validators import BaseValidator
from django.utils.translation import gettext_lazy as _

from rest_framework.exceptions import ValidationError

from glucose_control.vpatient import MealEvent


class ExclusiveMinValueValidator(BaseValidator):
    message = _("Ensure this value is greater than %(limit_value)s.")
    code = "min_value"

    def compare(self, a, b):
        return a <= b


class DistinctValuesValidator:
    """Validate that none of the list fields repeat an entry."""

    _MESSAGE = _("Field '{field_name}' repeats {duplicates}.")

    def __init__(self, fields: Iterable[str], message=None):
        self._fields = tuple(fields)
        self._message = message or self._MESSAGE

    def __call__(self, attrs):
        errors = {}
        for field in self._fields:
            values = list(attrs.get(field) or ())
            duplicates = sorted({str(v) for v in values if values.count(v) > 1})
            if duplicates:
                errors[field] = str(self._message).format(field_name=field, duplicates=", ".join(duplicates))
        if errors:
            raise ValidationError(errors)


class TransferRolesValidator:
    """
    Validate explicit transfer roles against the configured cohort.

    Without explicit roles the first two patients are the sources and the third is the target, so
    only a cohort of at least three can run the scenario; that is checked when it runs.
    """

    _UNKNOWN = _("Transfer patient(s) {names} are not part of the configured patients.")

    def __init__(self, message=None):
        self._message = message or self._UNKNOWN

    def __call__(self, attrs):
        named = set(attrs.get("transfer_sources", ()))
        if attrs.get("transfer_target"):
            named.add(attrs["transfer_target"])
        unknown = sorted(named - set(attrs.get("patients", ())))
        if unknown:
            raise ValidationError({"transfer_sources": str(self._message).format(names=", ".join(unknown))})


def parse_meal(entry: str) -> MealEvent:
    """``"HH:MM=grams"`` or ``"minutes=grams"``."""
    try:
        when, carbs = entry.split("=")
        if ":" in when:
            hours, minutes = when.split(":")
            time_of_day = 60.0 * int(hours) + int(minutes)
        else:
            time_of_day = float(when)
        return MealEvent(time_of_day, float(carbs))
    except ValueError as error:
        raise ValidationError(_("Invalid meal '{entry}': expected 'HH:MM=grams'.").format(entry=entry)) from error


def validate_meals(entries: list[str]) -> list[str]:
    for entry in entries:
        parse_meal(entry)
    return entries


def validate_night_window(bounds: list[float]) -> list[float]:
    if len(bounds) != 2:
        raise ValidationError(_("Night window needs exactly a start and an end minute."))
    if bounds[0] >= 1440.0:
        raise ValidationError(_("Night window must start before the end of the day."))
    return bounds
