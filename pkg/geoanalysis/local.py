from .settings import *

# Development only - verbose engine logs
DEBUG = True
LOG_LEVEL = 'DEBUG'

for _logger in LOGGING['loggers'].values():
    _logger['level'] = LOG_LEVEL
