from django.apps import AppConfig


class EquilibriaConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.equilibria'
    verbose_name = 'Equilibria'
