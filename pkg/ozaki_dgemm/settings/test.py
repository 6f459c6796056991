from .base import *

from hypothesis import HealthCheck, settings as hypothesis_settings

for _logger in LOGGING["loggers"].values():
    _logger["level"] = "WARNING"

hypothesis_settings.register_profile(
    "dev",
    max_examples=100,
    deadline=None,
)
hypothesis_settings.register_profile(
    "ci",
    max_examples=500,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
hypothesis_settings.load_profile(config("HYPOTHESIS_PROFILE", default="dev"))
