"""
Django settings for the iBG equilibrium solver.

The project has no web surface and no database: Django provides the settings
layer, the app registry, management commands (the CLI) and the cache used to
share safety-game solutions between Celery workers.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config(
    'SECRET_KEY',
    default='ibg-solver-development-key'
)

DEBUG = config('DEBUG', default=False, cast=bool)

# Application definition
INSTALLED_APPS = [
    # Third-party apps
    'rest_framework',

    # Local apps
    'apps.games',
    'apps.safety',
    'apps.equilibria',
    'apps.synthesis',
    'apps.oracle',
    'apps.reductions',
    'apps.interface',
]

# Nothing is persisted; every result is computed on demand
DATABASES = {}

TIME_ZONE = 'UTC'

# REST Framework Configuration (serializers, parsers and renderers only)
REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_RENDERER_CLASSES': (
        'rest_framework.renderers.JSONRenderer',
    ),
    'DEFAULT_PARSER_CLASSES': (
        'rest_framework.parsers.JSONParser',
    ),
}

# =============================================================================
# SOLVER BUDGETS
# =============================================================================
# Maximum number of distinct A'_W states explored by one lasso search
IBG_STATE_BUDGET = config('IBG_STATE_BUDGET', default=10_000_000, cast=int)

# Maximum number of explicit T_W transition entries built by the oracle
IBG_ORACLE_SIZE_BUDGET = config('IBG_ORACLE_SIZE_BUDGET', default=2_000_000, cast=int)

# Maximum number of product states visited by the DFA intersection BFS
IBG_PRODUCT_BUDGET = config('IBG_PRODUCT_BUDGET', default=1_000_000, cast=int)

# Logging Configuration
LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        # stdout carries JSON results, so logs go to stderr
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
    'loggers': {
        'apps': {
            'handlers': ['console'],
            'level': 'DEBUG' if DEBUG else LOG_LEVEL,
            'propagate': False,
        },
    },
}

# =============================================================================
# REDIS CONFIGURATION
# =============================================================================
REDIS_URL = config('REDIS_URL', default='')

if REDIS_URL:
    CACHES = {
        'default': {
            'BACKEND': 'django_redis.cache.RedisCache',
            'LOCATION': REDIS_URL,
            'OPTIONS': {
                'CLIENT_CLASS': 'django_redis.client.DefaultClient',
            },
            'KEY_PREFIX': 'ibg',
            'TIMEOUT': 60 * 60,
        }
    }
else:
    CACHES = {
        'default': {
            'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
            'LOCATION': 'ibg-solver',
            'TIMEOUT': 60 * 60,
        }
    }

# =============================================================================
# CELERY CONFIGURATION
# =============================================================================
# Broker (message queue)
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default=REDIS_URL or 'memory://')

# Result backend (where to store task results)
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default=REDIS_URL or 'cache+memory://')

# Without a broker the fan-out runs in-process
CELERY_TASK_ALWAYS_EAGER = config(
    'CELERY_TASK_ALWAYS_EAGER',
    default=not bool(REDIS_URL),
    cast=bool
)
CELERY_TASK_EAGER_PROPAGATES = True

# Serialization format
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'

# Timezone
CELERY_TIMEZONE = TIME_ZONE
CELERY_ENABLE_UTC = True

# Task settings
CELERY_TASK_TIME_LIMIT = 30 * 60  # 30 minutes max
