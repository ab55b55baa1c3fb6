"""
Error handlers for the management commands.

Maps toolkit exceptions onto the documented exit codes:
0 success, 2 config/input error, 3 numerical failure or internal error,
4 non-convergence.
"""

import functools
import logging

from django.core.management.base import CommandError
from jsonschema import ValidationError

from .exceptions import ConfigError, DomainError, InputDataError, NumericalError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_NOT_CONVERGED = 4


def exit_code_for(exc):
    """Return the exit code for an exception raised by a command."""
    if isinstance(exc, (ConfigError, InputDataError, ValidationError, FileNotFoundError)):
        return EXIT_INPUT
    if isinstance(exc, DomainError):
        return EXIT_INPUT
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_NUMERICAL


def command_errors(handle):
    """Wrap a command's handle() so failures leave with the right exit code."""

    @functools.wraps(handle)
    def wrapped(self, *args, **options):
        try:
            return handle(self, *args, **options)
        except CommandError:
            raise
        except (ConfigError, InputDataError, ValidationError, FileNotFoundError,
                DomainError, NumericalError) as e:
            code = exit_code_for(e)
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]} failed ({code}): {e}")
            raise CommandError(str(e), returncode=code) from e
        except Exception as e:
            logger.exception(f"{self.__module__.rsplit('.', 1)[-1]} failed unexpectedly: {e}")
            raise CommandError(f"internal error: {e}", returncode=EXIT_NUMERICAL) from e

    return wrapped
