from django.apps import AppConfig


class OzgemmConfig(AppConfig):
    name = 'ozgemm'
