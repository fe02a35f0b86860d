from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class ChiGridConfig(AppConfig):
    name = "chigrid"
    verbose_name = _("Chi-process grid maxima")
    default_auto_field = "django.db.models.BigAutoField"
