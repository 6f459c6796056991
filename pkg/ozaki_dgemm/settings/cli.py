from .base import *

# Commands print reports on stdout; keep Django's own chatter off it.
LOGGING["loggers"]["django"] = {"handlers": ["console"], "level": "WARNING", "propagate": False}
