from django.apps import AppConfig


class AbpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'abp'
    verbose_name = 'ABP inequality verifier'
