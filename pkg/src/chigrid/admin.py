from django.contrib import admin
from django.db import transaction
from django.db.models import JSONField
from django.utils.translation import gettext_lazy as _

from django_json_widget.widgets import JSONEditorWidget

from .models import Experiment


@admin.register(Experiment)
class ExperimentAdmin(admin.ModelAdmin):
    search_fields = ("title",)
    date_hierarchy = "created_at"
    list_display = (
        "__str__",
        "status",
        "created_at",
        "finished_at",
        "get_master_seed",
        "get_sup_distance",
    )
    list_filter = ("status",)
    readonly_fields = ("status", "finished_at", "summary", "error")
    formfield_overrides = {
        JSONField: {"widget": JSONEditorWidget},
    }
    actions = ["run_experiments"]

    @admin.display(description=_("Seed"))
    def get_master_seed(self, obj):
        return obj.master_seed

    @admin.display(description=_("Sup distance"))
    def get_sup_distance(self, obj):
        value = obj.summary.get("sup_distance")
        if value is None:
            return "-"
        return "{:.4f}".format(value)

    def run_experiments(self, request, queryset):
        from .tasks import run_experiment_task

        queryset.update(status=Experiment.Status.PENDING, error="")
        for pk in queryset.values_list("pk", flat=True):
            transaction.on_commit(
                lambda pk=pk: run_experiment_task.delay(pk, force=True)
            )
        self.message_user(request, _("Queued experiments."))

    run_experiments.short_description = _("Run experiments")
