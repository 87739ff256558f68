from django.apps import AppConfig


class SplatRenderConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "splat_render"
