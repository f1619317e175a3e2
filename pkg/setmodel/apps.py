from django.apps import AppConfig


class SetmodelConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'setmodel'
    verbose_name = 'Closed set samples and scene suite'
