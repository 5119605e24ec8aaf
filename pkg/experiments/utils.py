import functools, logging

from django.core.management.base import CommandError

from core.exceptions import QpiError, UsageError

logger = logging.getLogger(__name__)


def reports_errors(handle):
    """Turn project errors raised by a command into ``CommandError`` with the matching exit code."""
    @functools.wraps(handle)
    def wrapper(self, *args, **options):
        try:
            return handle(self, *args, **options)

        except QpiError as error:
            logger.error('%s: %s', error.code, error)
            raise CommandError(f'{error.code}: {error}', returncode=error.exit_code) from error

    return wrapper


def parse_list(text, cast=str):
    """Split a comma- or space-separated command-line list."""
    items = [item for item in text.replace(',', ' ').split() if item]
    try:
        return [cast(item) for item in items]
    except ValueError as error:
        raise UsageError('malformed list value', value=text) from error
