from pathlib import Path
from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='django-insecure-default-key-change-this')
DEBUG = config('DEBUG', default=False, cast=bool)
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'cr_app',
]

# Nothing is persisted; spec files and reports are plain files.
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LOG_LEVEL = config('LOG_LEVEL', default='WARNING')

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
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'cr_app': {
            'handlers': ['stderr'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

# Constancy lemma tooling
CR_DEFAULT_ORDER = config('CR_DEFAULT_ORDER', default=8, cast=int)  # precision N
CR_ORACLE_POINTS = config('CR_ORACLE_POINTS', default=50, cast=int)
CR_FUZZ_TRIALS = config('CR_FUZZ_TRIALS', default=100, cast=int)
CR_FUZZ_DEGREE = config('CR_FUZZ_DEGREE', default=3, cast=int)
CR_DEFAULT_SEED = config('CR_DEFAULT_SEED', default=0, cast=int)
CR_RANDOM_NUMERATOR = config('CR_RANDOM_NUMERATOR', default=3, cast=int)  # |p| <= 3 in p/q
CR_RANDOM_DENOMINATOR = config('CR_RANDOM_DENOMINATOR', default=3, cast=int)  # 1 <= q <= 3

HYPOTHESIS_PROFILE = config('HYPOTHESIS_PROFILE', default='dev')
