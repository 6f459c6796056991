from django.apps import AppConfig


class LpformatConfig(AppConfig):
    name = 'lpformat'
