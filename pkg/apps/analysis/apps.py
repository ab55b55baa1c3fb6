from django.apps import AppConfig


class AnalysisConfig(AppConfig):
    name = 'apps.analysis'
    verbose_name = "Analytic prevalence and prevalence odds"
