from celery import shared_task

from .settings import CHIGRID_EXPERIMENT_TIME_LIMIT


@shared_task(acks_late=True, time_limit=CHIGRID_EXPERIMENT_TIME_LIMIT)
def run_experiment_task(experiment_pk, force=False):
    from .models import Experiment
    from .services import run_recorded_experiment

    try:
        experiment = Experiment.objects.get(pk=experiment_pk)
    except Experiment.DoesNotExist:
        return None
    report = run_recorded_experiment(experiment, force=force)
    return report.within_tolerance
