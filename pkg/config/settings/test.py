"""
With these settings, tests run faster.
"""

from .base import *  # noqa
from .base import env

# GENERAL
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#secret-key
SECRET_KEY = env(
    "DJANGO_SECRET_KEY",
    default="Tq7Wm2Xc9Vb4Nz1Ls8Kd3Jf6Hg0Pa5Oe2Iu7Yr4Ut1Re9Wq6Ez3Xs8Cd5Vf0Bg2Nh",
)
# https://docs.djangoproject.com/en/dev/ref/settings/#test-runner
TEST_RUNNER = "django.test.runner.DiscoverRunner"

# PASSWORDS
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#password-hashers
PASSWORD_HASHERS = ["django.contrib.auth.hashers.MD5PasswordHasher"]

# Experiment bench
# ------------------------------------------------------------------------------
GLUCOSE_CONTROL_WORKERS = 1
GLUCOSE_CONTROL_COHORT_DIR = BASE_DIR / "cohort"  # noqa F405
