from django.apps import AppConfig


class HashGridAppConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "hash_grid"
