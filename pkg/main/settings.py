"""
Django settings for the blowup project.

The project has no web surface: Django provides the management-command
CLI, configuration, logging and the optional run ledger database.

Every numerical knob lives in the ``BLOWUP`` dict below and can be
overridden with a ``BLOWUP_<NAME>`` environment variable (or a ``.env``
file next to ``manage.py``).
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables from .env
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'insecure-default-key')

DEBUG = os.getenv('DEBUG', 'False').lower() in ['true', '1', 'yes']

ALLOWED_HOSTS = []

BLOWUP_VERSION = '0.3.0'


# Application definition

INSTALLED_APPS = [
    'params.apps.ParamsConfig',
    'phasespace.apps.PhasespaceConfig',
    'manifolds.apps.ManifoldsConfig',
    'integrate.apps.IntegrateConfig',
    'analyze.apps.AnalyzeConfig',
    'shooter.apps.ShooterConfig',
    'profiles.apps.ProfilesConfig',
    'cli.apps.CliConfig',
]


# Database
# PostgreSQL when POSTGRES_DB is configured, a local SQLite file otherwise.

if os.getenv('POSTGRES_DB'):
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql_psycopg2',
            'NAME': os.getenv('POSTGRES_DB'),
            'USER': os.getenv('POSTGRES_USER'),
            'PASSWORD': os.getenv('POSTGRES_PASSWORD'),
            'HOST': os.getenv('DATABASE_HOST', 'localhost'),
            'PORT': os.getenv('DATABASE_PORT', '5432'),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / os.getenv('SQLITE_NAME', 'db.sqlite3'),
        }
    }


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.getenv('BLOWUP_LOG_LEVEL', 'INFO').upper(),
    },
}


# Numerical defaults

def _env_float(name, default):
    value = os.getenv(f'BLOWUP_{name}')
    return float(value) if value not in (None, '') else default


def _env_int(name, default):
    value = os.getenv(f'BLOWUP_{name}')
    return int(value) if value not in (None, '') else default


BLOWUP = {
    # integrator
    'METHOD': os.getenv('BLOWUP_METHOD', 'DOP853'),
    'REL_TOL': _env_float('REL_TOL', 1e-10),
    'ABS_TOL': _env_float('ABS_TOL', 1e-12),
    'S_MAX': _env_float('S_MAX', 200.0),
    'RADIUS_MAX': _env_float('RADIUS_MAX', 1e6),
    'MAX_STEP': _env_float('MAX_STEP', 0.05),
    # terminal classification
    'FATE_TOL': _env_float('FATE_TOL', 1e-3),
    'X_BIG': _env_float('X_BIG', 1e3),
    'BAND_TOL': _env_float('BAND_TOL', 1e-6),
    'TANGENCY_TOL': _env_float('TANGENCY_TOL', 1e-8),
    # seeds
    'EPS_P0': _env_float('EPS_P0', 1e-5),
    'EPS_P3': _env_float('EPS_P3', 1e-5),
    'EPS_Q5': _env_float('EPS_Q5', 1e-4),
    # searches
    'BISECTION_TOL': _env_float('BISECTION_TOL', 1e-12),
    'SWEEP_POINTS': _env_int('SWEEP_POINTS', 200),
    'SWEEP_C_MIN': _env_float('SWEEP_C_MIN', 1e-3),
    'SWEEP_C_MAX': _env_float('SWEEP_C_MAX', 1e3),
    'BRACKET_C_MIN': _env_float('BRACKET_C_MIN', 1e-4),
    'BRACKET_C_MAX': _env_float('BRACKET_C_MAX', 1e4),
    'BRACKET_POINTS': _env_int('BRACKET_POINTS', 120),
    'RESCAN_POINTS': _env_int('RESCAN_POINTS', 24),
    'RESCAN_DEPTH': _env_int('RESCAN_DEPTH', 2),
    'SIGMA_EXPLORATION': _env_float('SIGMA_EXPLORATION', None),
    'THREADS': _env_int('THREADS', os.cpu_count() or 1),
}
