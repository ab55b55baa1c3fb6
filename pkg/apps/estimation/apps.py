from django.apps import AppConfig


class EstimationConfig(AppConfig):
    name = 'apps.estimation'
    verbose_name = "Mortality ratio estimation"
