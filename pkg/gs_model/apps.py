from django.apps import AppConfig


class GsModelConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "gs_model"
