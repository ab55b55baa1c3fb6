from django.apps import AppConfig


class ReportsConfig(AppConfig):
    name = 'apps.reports'
    verbose_name = "Readers, writers and run manifests"

    def ready(self):
        import apps.reports.signals
