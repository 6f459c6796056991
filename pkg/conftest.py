import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "ozaki_dgemm.settings.test")
django.setup()
