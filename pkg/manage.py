#!/usr/bin/env python
"""Command-line utility: Ozaki-scheme experiments and the test runner."""
import os
import sys


def main():
    """Run administrative tasks."""
    default_settings = "ozaki_dgemm.settings.cli"
    if len(sys.argv) > 1 and sys.argv[1] == "test":
        default_settings = "ozaki_dgemm.settings.test"
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", default_settings)

    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
