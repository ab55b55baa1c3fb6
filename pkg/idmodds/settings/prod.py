from .base import *

DEBUG = False

# Batch runs (replicate studies) stay quiet apart from warnings and summaries
LOGGING['handlers']['console']['formatter'] = 'simple'
LOGGING['loggers']['apps']['level'] = 'INFO'
LOGGING['loggers']['idmodds']['level'] = 'WARNING'
