from .base import *

DEBUG = True

LOGGING['loggers']['apps']['level'] = 'DEBUG'
