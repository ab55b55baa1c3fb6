from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Caps internal parallelism of grid evaluations and replicate fits (0 = auto)
IDM_ODDS_THREADS = int(os.getenv("IDM_ODDS_THREADS", "0"))

INSTALLED_APPS = [
    'apps.core',
    'apps.rates',
    'apps.analysis',
    'apps.simulation',
    'apps.estimation',
    'apps.reports',
]

USE_TZ = True
TIME_ZONE = "UTC"

# Bundled inputs
REFERENCE_CONFIG_PATH = BASE_DIR / "config" / "reference.json"
TABLE1_FIXTURE_PATH = BASE_DIR / "apps" / "estimation" / "data" / "table1.csv"

# ============================================================================
# CACHING CONFIGURATION
# ============================================================================

CACHES = {
    "default": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "idmodds-cache",
        "OPTIONS": {
            "MAX_ENTRIES": 20000
        },
        "KEY_PREFIX": "idmodds",
        "TIMEOUT": 600,
    }
}

# Cache timeouts for specific data
CACHE_TIMEOUTS = {
    "loglik": 3600,  # one fit never runs longer than this
}

# ============================================================================
# LOGGING CONFIGURATION
# ============================================================================

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        "django": {
            "handlers": ["console"],
            "level": "WARNING",
            "propagate": False,
        },
        "apps": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        },
        "idmodds": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        },
    },
}
