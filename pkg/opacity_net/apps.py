from django.apps import AppConfig


class OpacityNetConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "opacity_net"
