from django.apps import AppConfig


class PhasespaceConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'phasespace'
