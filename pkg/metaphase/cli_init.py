import argparse
import logging
import pathlib

from . import scenario
from .errors import ConfigError
from .utils import handle_cli_error


logger = logging.getLogger("init")


class Init:
    """
    Writes a scenario template for a harmonic oscillator run
    """

    def __init__(self, parser: argparse.ArgumentParser):
        parser.add_argument(
            "path",
            type=pathlib.Path,
            nargs="?",
            default=pathlib.Path("scenario.toml"),
            help="Where to write the template",
        )

    @handle_cli_error
    def run(self, path: pathlib.Path):
        if path.exists():
            raise ConfigError(f"{path} already exists, not overwriting it")

        path.parent.mkdir(parents=True, exist_ok=True)
        scenario.write_default_scenario(path)

        logger.info("Created %s", path)
