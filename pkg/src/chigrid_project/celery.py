import os

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "chigrid_project.settings")

from django.conf import settings  # noqa

from celery import Celery  # noqa

app = Celery("chigrid")
app.config_from_object("django.conf:settings", namespace="CELERY")

app.autodiscover_tasks()
