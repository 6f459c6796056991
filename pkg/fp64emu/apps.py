from django.apps import AppConfig


class Fp64EmuConfig(AppConfig):
    name = 'fp64emu'
