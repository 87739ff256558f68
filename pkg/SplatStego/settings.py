"""
Django settings for SplatStego project.

Only settings, the management-command CLI and the test runner are used; no
database, URL routing or templates are configured.
"""

import os
from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config("SECRET_KEY", default="splatstego-local-only")

DEBUG = config("DEBUG", cast=bool, default=False)

# Application definition

INSTALLED_APPS = [
    "core",
    "gs_model",
    "sh_codec",
    "hash_grid",
    "opacity_net",
    "splat_render",
    "stego_train",
    "attacks",
    "workflows",
]

DATABASES = {}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

TIME_ZONE = "UTC"

USE_TZ = True

# Rendering and training workers

SPLAT_THREADS = config("SPLAT_THREADS", cast=int, default=os.cpu_count() or 1)
SPLAT_TILE_SIZE = config("SPLAT_TILE_SIZE", cast=int, default=16)
SPLAT_PROGRESS = config("SPLAT_PROGRESS", cast=bool, default=True)

# Logging

SPLAT_LOG_LEVEL = config("SPLAT_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "{asctime} {levelname} {name}: {message}", "style": "{"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "root": {"handlers": ["console"], "level": "WARNING"},
    "loggers": {
        app: {"handlers": ["console"], "level": SPLAT_LOG_LEVEL, "propagate": False}
        for app in INSTALLED_APPS
    },
}
