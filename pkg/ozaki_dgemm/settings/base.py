from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent


# Django insists on a key even though nothing here signs anything.
SECRET_KEY = config("SECRET_KEY", default="ozaki-dgemm-local-only")

DEBUG = config("DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',

    'lpformat',
    'fp64emu',
    'slicing',
    'lpgemm',
    'ozgemm',
    'oracle',
    'cli',
]

# No persistence: every command is a pure computation over generated matrices.
DATABASES = {}

USE_I18N = False
USE_TZ = True
TIME_ZONE = "UTC"


# Ozaki scheme defaults (command-line flags fall back to these)

OZ_DEFAULT_TYPE2 = config("OZ_DEFAULT_TYPE2", default="fp16")
OZ_DEFAULT_TYPE3 = config("OZ_DEFAULT_TYPE3", default="fp32")
OZ_DEFAULT_KBLOCK = config("OZ_DEFAULT_KBLOCK", default=0, cast=int)
OZ_DEFAULT_SEED = config("OZ_DEFAULT_SEED", default=1, cast=int)
OZ_WORKERS = config("OZ_WORKERS", default=1, cast=int)
OZ_LP_KERNEL = config("OZ_LP_KERNEL", default="auto")
OZ_VERIFY_TRIALS = config("OZ_VERIFY_TRIALS", default=100000, cast=int)
OZ_REPORT_SCHEMA_VERSION = 1

OZ_LOG_LEVEL = config("OZ_LOG_LEVEL", default="INFO")


REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'UNAUTHENTICATED_USER': None,
}


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "colored": {
            "()": "colorlog.ColoredFormatter",
            "format": "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "colored",
        },
    },
    "loggers": {
        app: {"handlers": ["console"], "level": OZ_LOG_LEVEL, "propagate": False}
        for app in ("lpformat", "fp64emu", "slicing", "lpgemm", "ozgemm", "oracle", "cli")
    },
}
