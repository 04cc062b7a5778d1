from django.apps import AppConfig


class InterfaceConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.interface'
    verbose_name = 'Command-line interface'
