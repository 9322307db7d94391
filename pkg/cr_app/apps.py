from django.apps import AppConfig


class CrAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'cr_app'
    verbose_name = 'CR constancy lemma'
