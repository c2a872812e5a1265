import argparse
import concurrent.futures
import contextlib
import functools
import logging
import os
import pathlib
import sys
import typing

from .errors import Error

logger = logging.getLogger("metaphase")

T = typing.TypeVar("T")
R = typing.TypeVar("R")

#: environment variable capping the number of worker threads
THREADS_ENV = "METAPHASE_THREADS"


def worker_count() -> int:
    default = os.cpu_count() or 1
    value = os.environ.get(THREADS_ENV)
    if not value:
        return default
    try:
        count = int(value)
    except ValueError:
        raise Error(f"{THREADS_ENV} must be an integer (got {value!r})") from None
    if count < 1:
        raise Error(f"{THREADS_ENV} must be at least 1 (got {count})")
    return count


def parallel_map(fn: typing.Callable[[T], R], items: typing.Sequence[T]) -> typing.List[R]:
    """
    Maps ``fn`` over ``items`` on a thread pool and returns the results in
    input order. numpy releases the GIL in its linear algebra kernels, so
    independent samples overlap.
    """
    workers = min(worker_count(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    logger.debug("mapping %d items over %d threads", len(items), workers)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def print_err(*args):
    print(*args, file=sys.stderr)


def handle_cli_error(func):
    """Reports library errors as ``ERROR: ...`` and returns their exit code"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Error as e:
            print_err("ERROR:", e)
            return e.exit_code

    return wrapper


def add_config_argument(parser: argparse.ArgumentParser):
    parser.add_argument("config", type=pathlib.Path, help="Scenario file (.json or .toml)")


def add_output_arguments(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--format",
        dest="fmt",
        choices=["csv", "json"],
        default="csv",
        help="Output format",
    )
    parser.add_argument(
        "--out",
        type=pathlib.Path,
        default=None,
        help="Write the table to this file instead of stdout",
    )


@contextlib.contextmanager
def open_output(out: typing.Optional[pathlib.Path]):
    if out is None:
        yield sys.stdout
    else:
        with open(out, "w", newline="") as fp:
            yield fp
