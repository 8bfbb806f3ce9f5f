"""
WSGI config for the glucose_control project.

It exposes the module-level variable ``application`` that Django's ``runserver``
and any WSGI server discover through the ``WSGI_APPLICATION`` setting.
"""
import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings.local")

application = get_wsgi_application()
