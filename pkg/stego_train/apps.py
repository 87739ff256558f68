from django.apps import AppConfig


class StegoTrainConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "stego_train"
