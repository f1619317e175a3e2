from django.apps import AppConfig


class NormalbundleConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'normalbundle'
    verbose_name = 'Generalized normal bundle and curvatures'
