from django.apps import AppConfig


class ShooterConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'shooter'
