#!/usr/bin/env python
"""Command-line entry point of the blowup toolkit.

All user commands (exponents, points, shoot, sweep, find, deadcore,
pohozaev, nonexist, figure, runs) are Django management commands of the
``cli`` app; ``python manage.py test`` runs the test-suite.
"""
import os
import sys


def main():
    """Dispatch to the Django management command named in argv."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'main.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the packages listed in "
            "requirements.txt into the active environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
