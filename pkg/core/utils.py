import contextlib, functools, logging, os, tempfile, time

logger = logging.getLogger(__name__)


def timed(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start  = time.perf_counter()
        result = func(*args, **kwargs)
        end    = time.perf_counter()
        logger.info('Function : %s finished in %.2fs', func.__name__, end - start)
        return result
    return wrapper


@contextlib.contextmanager
def atomic_write(path, newline=''):
    """Write a UTF-8 text file next to ``path`` and rename it into place on success."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)

    descriptor, temporary = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(descriptor, 'w', encoding='utf-8', newline=newline) as handle:
            yield handle
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise
