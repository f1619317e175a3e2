"""
Django settings for geoanalysis project.

The project has no web surface: it is driven entirely through management
commands (scene, contact, curvature, viscosity, abp, harnack, report).

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
from dotenv import load_dotenv
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env_file_path = os.path.join(BASE_DIR, 'geoanalysis', 'secrets', '.env')

load_dotenv(env_file_path)

DEBUG = os.getenv('DEBUG', default='False') == 'True'

ALLOWED_HOSTS = os.getenv("ALLOWED_HOSTS", default="*").split(',')

# SECURITY WARNING: only used for Django internals, nothing is signed.
SECRET_KEY = os.getenv('SECRET_KEY', default='geoanalysis-local-key')

# Application definition

INSTALLED_APPS = [
    # APPS
    'setmodel',
    'paraboloids',
    'normalbundle',
    'abp',
    'harnack',
    'reports',
]

# No persistence beyond flat files.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# ENGINE

ENGINE_THREADS = int(os.getenv('GEO_THREADS', default='4'))

ENGINE_SEED = int(os.getenv('GEO_SEED', default='20240601'))

REPORT_OUTPUT_DIR = Path(os.getenv('GEO_OUTPUT_DIR', default=str(BASE_DIR / 'output')))

DEFAULT_SUITE_CONFIG = BASE_DIR / 'reports' / 'static' / 'data' / 'suite.ini'

# Relative tolerance for ties between maximizers of a touching sup.
CONTACT_TIE_RTOL = float(os.getenv('GEO_TIE_RTOL', default='1e-12'))

# Brute-force chunk size (centers per block) for touching offsets.
BRUTE_FORCE_CHUNK = int(os.getenv('GEO_BRUTE_FORCE_CHUNK', default='256'))

SVG_HASH_SALT = 'geoanalysis'


# LOGGING

LOG_LEVEL = os.getenv('GEO_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'engine': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'engine',
        },
    },
    'loggers': {
        'geoanalysis': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'setmodel': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'paraboloids': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'normalbundle': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'abp': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'harnack': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'reports': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
    },
}

import subprocess
# USES THE HASH COMMIT AS ENGINE VERSION
try:
    APP_VERSION = subprocess.check_output(
        ["git", "rev-parse", "--short", "HEAD"], stderr=subprocess.DEVNULL
    ).decode("utf-8").strip()
except Exception:
    APP_VERSION = "dev"
