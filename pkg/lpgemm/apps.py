from django.apps import AppConfig


class LpgemmConfig(AppConfig):
    name = 'lpgemm'
