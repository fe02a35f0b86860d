from django.db import models
from django.utils import timezone
from django.utils.translation import gettext_lazy as _

from .validators import validate_experiment_schema


class Experiment(models.Model):
    class Status(models.TextChoices):
        PENDING = "pending", _("pending")
        RUNNING = "running", _("running")
        DONE = "done", _("done")
        FAILED = "failed", _("failed")

    title = models.CharField(_("title"), max_length=250, blank=True)
    created_at = models.DateTimeField(_("created at"), default=timezone.now)
    finished_at = models.DateTimeField(_("finished at"), null=True, blank=True)
    status = models.CharField(
        _("status"), max_length=20, choices=Status.choices, default=Status.PENDING
    )

    config = models.JSONField(
        _("configuration"), default=dict, validators=[validate_experiment_schema]
    )
    output_dir = models.CharField(_("output directory"), max_length=500, blank=True)

    summary = models.JSONField(_("summary"), blank=True, default=dict)
    error = models.TextField(_("error"), blank=True)

    class Meta:
        verbose_name = _("experiment")
        verbose_name_plural = _("experiments")
        ordering = ("-created_at",)

    def __str__(self):
        return self.title or "Experiment %s" % self.pk

    @property
    def master_seed(self):
        return self.config.get("master_seed")

    @property
    def within_tolerance(self):
        return self.summary.get("within_tolerance")
