from django.apps import AppConfig


class ParaboloidsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'paraboloids'
    verbose_name = 'Touching paraboloids and contact sets'
