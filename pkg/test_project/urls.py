from chigrid_project.urls import urlpatterns  # noqa
