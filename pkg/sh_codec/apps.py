from django.apps import AppConfig


class ShCodecConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "sh_codec"
