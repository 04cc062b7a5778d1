from django.apps import AppConfig


class ReductionsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.reductions'
    verbose_name = 'DFA intersection reduction'
